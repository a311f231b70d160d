#include "pehsim/simulation.hpp"

#include "pehsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pehsim {

namespace {

constexpr std::size_t kDim = 15;
using Y = integrator::Vec<kDim>;

enum Slot : std::size_t {
    kZ,
    kZd,
    kH,
    kVp,
    kVr,
    kVs,
    kIl,
    kVo,
    kPhase,
    kWorkIn,
    kVisc,
    kHyst,
    kElec,
    kLoad,
    kBuckIn,
};

// Quantities held constant between events.
struct Segment {
    sece::DiodeMode diode = sece::DiodeMode::Blocking;
    double duty = 0.0;
    double r_load = 1.0;
    double c_effective = 15e-9;
};

struct HarvesterRhs {
    const HarvesterParams* p;
    const excitation::Drive* drive;
    Segment seg;

    void operator()(double t, const Y& y, Y& dy) const {
        const double force = drive->force(t, y[kPhase]);
        const transducer::ElectricalParams el{p->c_p, seg.c_effective};
        const transducer::MechState ms{y[kZ], y[kZd], y[kH], y[kVp]};
        const auto md = transducer::mech_derivatives(ms, force, p->mech, p->bouc_wen, el);
        dy[kZ] = md.dz;
        dy[kZd] = md.dz_dot;
        dy[kH] = md.dh;

        const int pol = sece::polarity(seg.diode);
        if (pol == 0) {
            dy[kVp] = md.dv_p_open;
            dy[kVr] = 0.0;
        } else {
            // Piezo and rectifier capacitor share the piezo current while the
            // bridge conducts.
            const double dv = p->mech.theta * y[kZd] / (seg.c_effective + p->sece.c_rect);
            dy[kVp] = dv;
            dy[kVr] = pol * dv;
        }

        if (p->power.buck_enabled) {
            const auto bd = powertrain::buck_derivatives(y[kVs], y[kIl], y[kVo], seg.duty,
                                                         seg.r_load, p->power);
            dy[kVs] = bd.dv_storage;
            dy[kIl] = bd.di_l;
            dy[kVo] = bd.dv_out;
            dy[kBuckIn] = seg.duty * std::max(y[kIl], 0.0) * y[kVs];
        } else {
            dy[kVs] = 0.0;
            dy[kIl] = 0.0;
            dy[kVo] = 0.0;
            dy[kBuckIn] = 0.0;
        }
        dy[kPhase] = 2.0 * std::numbers::pi * drive->frequency(t);
        dy[kWorkIn] = force * y[kZd];
        dy[kVisc] = p->mech.damping * y[kZd] * y[kZd];
        dy[kHyst] = transducer::hysteretic_force(y[kH], p->mech, p->bouc_wen) * y[kZd];
        dy[kElec] = p->mech.theta * y[kVp] * y[kZd];
        dy[kLoad] = y[kVo] * y[kVo] / seg.r_load;
    }
};

Y pack(const Checkpoint& cp) {
    Y y{};
    const auto& s = cp.state;
    y[kZ] = s.z;
    y[kZd] = s.z_dot;
    y[kH] = s.h;
    y[kVp] = s.v_p;
    y[kVr] = s.v_rect;
    y[kVs] = s.v_storage;
    y[kIl] = s.i_l;
    y[kVo] = s.v_out;
    y[kPhase] = cp.phase;
    y[kWorkIn] = cp.ledger.work_in;
    y[kVisc] = cp.ledger.viscous;
    y[kHyst] = cp.ledger.hysteretic;
    y[kElec] = cp.ledger.electrical;
    y[kLoad] = cp.ledger.load;
    y[kBuckIn] = cp.ledger.buck_input;
    return y;
}

void unpack(double t, const Y& y, const Segment& seg, Checkpoint& cp) {
    auto& s = cp.state;
    s.t = t;
    s.z = y[kZ];
    s.z_dot = y[kZd];
    s.h = y[kH];
    s.v_p = y[kVp];
    s.v_rect = y[kVr];
    s.v_storage = y[kVs];
    s.i_l = y[kIl];
    s.v_out = y[kVo];
    s.diode = seg.diode;
    cp.phase = y[kPhase];
    cp.ledger.work_in = y[kWorkIn];
    cp.ledger.viscous = y[kVisc];
    cp.ledger.hysteretic = y[kHyst];
    cp.ledger.electrical = y[kElec];
    cp.ledger.load = y[kLoad];
    cp.ledger.buck_input = y[kBuckIn];
    cp.r_load = seg.r_load;
    cp.controller.duty = seg.duty;
}

// Event function of the form g(y) = sum_i w_i y_i + offset.
struct LinearEvent {
    EventKind kind;
    int polarity = 0;  // for DiodeOn
    std::array<std::pair<std::size_t, double>, 2> terms{};
    std::size_t n_terms = 0;
    double offset = 0.0;

    [[nodiscard]] double operator()(const Y& y) const {
        double g = offset;
        for (std::size_t i = 0; i < n_terms; ++i) g += terms[i].second * y[terms[i].first];
        return g;
    }
    [[nodiscard]] double rate(const Y& dy) const {
        double g = 0.0;
        for (std::size_t i = 0; i < n_terms; ++i) g += terms[i].second * dy[terms[i].first];
        return g;
    }
};

struct LocatedEvent {
    LinearEvent fn;
    integrator::DenseStep<kDim> step;  // exact step from the segment start to the root
};

}  // namespace

void validate(const HarvesterParams& p) {
    transducer::validate(p.mech);
    transducer::validate(p.bouc_wen);
    transducer::validate(transducer::ElectricalParams{p.c_p, p.c_p});
    sece::validate(p.sece);
    powertrain::validate(p.power);
    mppt::validate(p.mppt);
    sca::validate(p.bank);
    integrator::validate(p.solver);
}

std::string to_string(ScaMode m) {
    return m == ScaMode::FixedBypass ? "fixed_bypass" : "adaptive_lut";
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::DisplacementExtremum: return "displacement_extremum";
        case EventKind::DiodeOn: return "diode_on";
        case EventKind::DiodeOff: return "diode_off";
        case EventKind::ControllerTick: return "controller_tick";
        case EventKind::LoadStep: return "load_step";
        case EventKind::LutRetune: return "lut_retune";
    }
    return "unknown";
}

double energy_residual(const HarvesterParams& p, const Checkpoint& from, const Checkpoint& to) {
    auto kinetic = [&](const SimState& s) { return 0.5 * p.mech.mass * s.z_dot * s.z_dot; };
    auto elastic = [&](const SimState& s) {
        return 0.5 * p.bouc_wen.alpha * p.mech.stiffness * s.z * s.z;
    };
    const double d_work = to.ledger.work_in - from.ledger.work_in;
    const double d_kin = kinetic(to.state) - kinetic(from.state);
    const double d_el = elastic(to.state) - elastic(from.state);
    const double d_hyst = to.ledger.hysteretic - from.ledger.hysteretic;
    const double d_visc = to.ledger.viscous - from.ledger.viscous;
    const double d_elec = to.ledger.electrical - from.ledger.electrical;
    return d_work - (d_kin + d_el + d_hyst + d_visc + d_elec);
}

Simulator::Simulator(HarvesterParams params, RunOptions options)
    : params_(std::move(params)), options_(std::move(options)) {
    validate(params_);
    excitation::validate(options_.drive);
    if (!(options_.duration > 0.0)) {
        throw ConfigError("scenario duration must be > 0");
    }
    if (!(options_.sample_rate > 0.0) || !(options_.retune_period > 0.0)) {
        throw ConfigError("sample_rate and retune_period must be > 0");
    }
    if (options_.sca_mode == ScaMode::AdaptiveLut && !options_.fixed_c_effective &&
        (!options_.lut || options_.lut->empty())) {
        throw ConfigError("adaptive_lut mode requires a non-empty LUT");
    }
    drive_ = excitation::Drive(options_.drive, options_.duration + 1.0);
    settings_ = sca::enumerate_settings(params_.bank, params_.c_p);
}

Checkpoint Simulator::initial_checkpoint() const {
    Checkpoint cp;
    cp.controller = mppt::initial_state(params_.mppt, params_.power.d_min, params_.power.d_max);
    if (options_.fixed_duty) {
        cp.controller.duty = *options_.fixed_duty;
    }
    if (!params_.power.buck_enabled) {
        cp.controller.duty = 0.0;
    }
    cp.setting = sca::make_setting(0, sca::Topology::Parallel, params_.bank, params_.c_p);
    if (options_.fixed_c_effective) {
        cp.setting.c_effective = *options_.fixed_c_effective;
    }
    cp.r_load = powertrain::load_resistance(0.0, params_.power);
    return cp;
}

RunResult Simulator::run() { return run_from(initial_checkpoint()); }

RunResult Simulator::run_from(const Checkpoint& start) {
    const auto& cfg = params_.solver;
    const auto& pp = params_.power;
    const double t_end = options_.duration;
    const bool controller_active =
        pp.buck_enabled && params_.mppt.enabled && !options_.fixed_duty;
    const bool adaptive =
        options_.sca_mode == ScaMode::AdaptiveLut && !options_.fixed_c_effective;
    const bool noise_knots = options_.drive.noise_enabled && options_.drive.noise_rms > 0.0;
    const double knot_dt = drive_.lattice().spacing();
    const double period = params_.mppt.control_period;
    const double fs = options_.sample_rate;
    constexpr double kCoincide = 1e-12;

    RunResult result;
    Checkpoint cp = start;
    Segment seg;
    seg.diode = cp.state.diode;
    seg.duty = pp.buck_enabled ? (options_.fixed_duty ? *options_.fixed_duty : cp.controller.duty)
                               : 0.0;
    seg.r_load = cp.r_load;
    seg.c_effective = cp.setting.c_effective;

    HarvesterRhs rhs{&params_, &drive_, seg};
    double t = cp.state.t;
    Y y = pack(cp);
    Y f{};
    rhs(t, y, f);
    double h = cfg.initial_step;

    std::uint64_t sample_k = static_cast<std::uint64_t>(std::ceil(t * fs - 1e-9));
    std::uint32_t pending_flags = 0;
    std::vector<double> snap_times = options_.snapshot_times;
    std::sort(snap_times.begin(), snap_times.end());
    std::vector<std::pair<double, Checkpoint>> snaps;
    std::size_t snap_i = 0;
    while (snap_i < snap_times.size() && snap_times[snap_i] < t) ++snap_i;

    auto current_state = [&]() {
        unpack(t, y, seg, cp);
        cp.setting.c_effective = seg.c_effective;
        return cp.state;
    };

    auto record = [&](EventKind kind, const SimState& before, const SimState& after,
                      bool extraction = false) {
        ++result.event_counts[static_cast<std::size_t>(kind)];
        if (options_.record_events) {
            result.events.push_back({t, kind, before, after, extraction});
        }
    };

    const double h_bound = transducer::hysteresis_bound(params_.bouc_wen);

    auto emit_samples = [&](const integrator::DenseStep<kDim>& step, double t_stop,
                            bool inclusive) {
        if (!options_.record_samples) {
            return;
        }
        for (;;) {
            const double ts = static_cast<double>(sample_k) / fs;
            if (ts > t_end || ts > t_stop || (!inclusive && ts >= t_stop)) {
                break;
            }
            const Y ys = step.at(ts);
            Sample s;
            s.t = ts;
            s.z = ys[kZ];
            s.z_dot = ys[kZd];
            s.h = std::clamp(ys[kH], -h_bound, h_bound);
            s.v_p = ys[kVp];
            s.v_rect = ys[kVr];
            s.v_storage = ys[kVs];
            s.i_l = std::max(ys[kIl], 0.0);
            s.v_out = ys[kVo];
            s.p_load = powertrain::delivered_power(ys[kVo], seg.r_load);
            s.duty = seg.duty;
            s.f_drive = drive_.frequency(ts);
            s.c_effective = seg.c_effective;
            s.event_flags = pending_flags;
            pending_flags = 0;
            result.samples.push_back(s);
            ++sample_k;
        }
    };

    auto refresh_rhs = [&]() {
        rhs.seg = seg;
        rhs(t, y, f);
    };

    auto tick_time = [&](std::uint64_t k) { return static_cast<double>(k) * period; };
    auto retune_time = [&](std::uint64_t k) {
        return static_cast<double>(k) * options_.retune_period;
    };

    // Rectifier state right after an instantaneous reset, given the direction
    // of the motion that follows.
    auto resolve_diode = [&](int next_dir) {
        const auto mode = sece::rectifier_mode(y[kVp], y[kVr], params_.sece);
        int pol = sece::polarity(mode);
        if (pol != 0 && y[kVp] == 0.0 && y[kVr] == 0.0) {
            pol = next_dir;  // ideal diodes at zero charge: polarity follows the motion
        }
        if (pol != 0 && pol * next_dir > 0) {
            return pol > 0 ? sece::DiodeMode::ConductingPositive
                           : sece::DiodeMode::ConductingNegative;
        }
        return sece::DiodeMode::Blocking;
    };

    auto handle_extremum = [&]() {
        const SimState before = current_state();
        result.max_abs_extremum_velocity =
            std::max(result.max_abs_extremum_velocity, std::abs(y[kZd]));
        pending_flags |= flags::extremum;
        if (seg.diode != sece::DiodeMode::Blocking) {
            seg.diode = sece::DiodeMode::Blocking;
            pending_flags |= flags::diode_off;
            record(EventKind::DiodeOff, before, current_state());
        }
        bool fired = false;
        if (params_.sece.enabled) {
            cp.state.sece_armed = std::abs(y[kZ]) >= params_.sece.arm_threshold_z;
            if (cp.state.sece_armed) {
                const sece::ElectricalNodes nodes{y[kZ], y[kVp], y[kVr], y[kVs], seg.c_effective};
                const auto ext = sece::extract_at_extremum(nodes, params_.sece, pp.c_storage);
                y[kVp] = ext.after.v_p;
                y[kVr] = ext.after.v_rect;
                y[kVs] = ext.after.v_storage;
                cp.ledger.sece_available += ext.energy_available;
                cp.ledger.sece_delivered += ext.energy_delivered;
                ++cp.extraction_count;
                fired = true;
                pending_flags |= flags::extraction;
            }
        }
        cp.motion_dir = -cp.motion_dir;
        const SimState mid = current_state();
        record(EventKind::DisplacementExtremum, before, mid, fired);
        const auto mode = resolve_diode(cp.motion_dir);
        if (mode != sece::DiodeMode::Blocking) {
            seg.diode = mode;
            pending_flags |= flags::diode_on;
            record(EventKind::DiodeOn, mid, current_state());
        }
    };

    auto handle_diode_on = [&](int pol) {
        const SimState before = current_state();
        seg.diode = pol > 0 ? sece::DiodeMode::ConductingPositive
                            : sece::DiodeMode::ConductingNegative;
        y[kVp] = pol * sece::conduction_threshold(y[kVr], params_.sece);
        pending_flags |= flags::diode_on;
        record(EventKind::DiodeOn, before, current_state());
    };

    auto process_time_events = [&]() {
        if (pp.buck_enabled && has_load_step(pp) && !cp.load_step_done &&
            std::abs(t - pp.t_load_step) <= kCoincide) {
            const SimState before = current_state();
            seg.r_load = pp.r_load_after_step;
            cp.load_step_done = true;
            pending_flags |= flags::load_step;
            record(EventKind::LoadStep, before, current_state());
        }
        if (adaptive && std::abs(t - retune_time(cp.next_retune)) <= kCoincide) {
            const SimState before = current_state();
            const auto& s = sca::retune(drive_.frequency(t), *options_.lut, settings_);
            if (s.c_effective != seg.c_effective) {
                ++result.retune_changes;
            }
            cp.setting = s;
            seg.c_effective = s.c_effective;
            ++cp.next_retune;
            pending_flags |= flags::lut_retune;
            record(EventKind::LutRetune, before, current_state());
        }
        if (controller_active && std::abs(t - tick_time(cp.next_tick)) <= kCoincide) {
            const SimState before = current_state();
            const mppt::Measurement meas{y[kVs], y[kVo],
                                         powertrain::delivered_power(y[kVo], seg.r_load)};
            cp.controller =
                mppt::controller_tick(meas, cp.controller, params_.mppt, t, pp.d_min, pp.d_max);
            seg.duty = cp.controller.duty;
            ++cp.next_tick;
            pending_flags |= flags::controller_tick;
            if (cp.controller.jumped) {
                pending_flags |= flags::focv_jump;
                ++result.focv_jumps;
            }
            result.ticks.push_back({t, seg.duty, meas.p_load, meas.v_storage, cp.controller.jumped});
            record(EventKind::ControllerTick, before, current_state());
        }
        while (snap_i < snap_times.size() && std::abs(t - snap_times[snap_i]) <= kCoincide) {
            current_state();
            result.snapshots.push_back(cp);
            ++snap_i;
        }
        refresh_rhs();
    };

    auto next_time_event = [&]() {
        double tn = t_end;
        if (pp.buck_enabled && has_load_step(pp) && !cp.load_step_done && pp.t_load_step < tn) {
            tn = std::min(tn, pp.t_load_step);
        }
        if (adaptive) tn = std::min(tn, retune_time(cp.next_retune));
        if (controller_active) tn = std::min(tn, tick_time(cp.next_tick));
        if (snap_i < snap_times.size()) tn = std::min(tn, snap_times[snap_i]);
        if (noise_knots) {
            const double knot = (std::floor(t / knot_dt + kCoincide) + 1.0) * knot_dt;
            tn = std::min(tn, knot);
        }
        return tn;
    };

    // Invariant sets the exact flow never leaves: the buck inductor current
    // stays non-negative and |h| stays within the Bouc-Wen bound.
    auto project = [&]() {
        bool changed = false;
        if (y[kIl] < 0.0) {
            y[kIl] = 0.0;
            changed = true;
        }
        if (std::abs(y[kH]) > h_bound) {
            y[kH] = std::copysign(h_bound, y[kH]);
            changed = true;
        }
        return changed;
    };

    // Events already due at the start instant (e.g. the t = 0 retune).
    process_time_events();

    const auto& sp = params_.sece;
    while (true) {
        const double t_limit = next_time_event();
        if (t_limit - t <= kCoincide) {
            t = std::max(t, t_limit);
            if (t >= t_end - kCoincide) {
                // Snapshots at the end instant precede that instant's events,
                // which a resumed run then processes.
                while (snap_i < snap_times.size() && snap_times[snap_i] <= t + kCoincide) {
                    current_state();
                    result.snapshots.push_back(cp);
                    ++snap_i;
                }
                break;
            }
            process_time_events();
            // Guard against an event time that does not advance.
            const double again = next_time_event();
            if (again - t <= kCoincide && again < t_end) {
                std::ostringstream msg;
                msg << "scheduled event did not advance at t=" << t;
                throw SimulationError(msg.str());
            }
            continue;
        }

        integrator::AcceptedStep<kDim> acc;
        try {
            acc = integrator::advance(t, y, f, h, t_limit, rhs, cfg);
        } catch (const StepSizeUnderflow& e) {
            std::ostringstream msg;
            msg << e.what() << " [z=" << y[kZ] << ", V_p=" << y[kVp] << ", V_storage=" << y[kVs]
                << ", diode=" << sece::polarity(seg.diode) << "]";
            throw StepSizeUnderflow(msg.str());
        }
        const auto& step = acc.step;
        ++result.accepted_steps;

        // Candidate state events for this step.
        std::array<LinearEvent, 3> candidates{};
        std::size_t n_cand = 0;
        if (cp.motion_dir != 0) {
            LinearEvent ev{EventKind::DisplacementExtremum};
            ev.terms[0] = {kZd, static_cast<double>(cp.motion_dir)};
            ev.n_terms = 1;
            if (ev(step.y0) > 0.0 && ev(step.y1) <= 0.0) candidates[n_cand++] = ev;
        }
        if (seg.diode == sece::DiodeMode::Blocking) {
            for (int pol : {1, -1}) {
                LinearEvent ev{EventKind::DiodeOn, pol};
                ev.terms[0] = {kVp, static_cast<double>(pol)};
                ev.terms[1] = {kVr, -1.0};
                ev.n_terms = 2;
                ev.offset = -2.0 * sp.v_diode;
                if (ev(step.y0) < 0.0 && ev(step.y1) >= 0.0) candidates[n_cand++] = ev;
            }
        }

        std::optional<LocatedEvent> hit;
        double t_hit = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_cand; ++c) {
            const auto& ev = candidates[c];
            const auto root = integrator::locate_event(
                step, [&](double, const Y& yy) { return ev(yy); }, cfg.event_tol);
            if (root.t < t_hit) {
                t_hit = root.t;
                hit = LocatedEvent{ev, {}};
            }
        }

        if (hit) {
            // Re-land on the root with genuine steps from the segment start,
            // polishing the dense-output estimate by Newton on g.
            const auto& ev = hit->fn;
            const double tau_max = step.t1 - t;
            double tau = std::clamp(t_hit - t, 0.0, tau_max);
            const double g_tol = ev.kind == EventKind::DisplacementExtremum
                                     ? 1e-3 * cfg.vel_tol
                                     : 1e-9 * (1.0 + std::abs(y[kVr]));
            integrator::DenseStep<kDim> exact;
            for (int it = 0; it < 12; ++it) {
                if (tau <= 0.0) {
                    exact = integrator::DenseStep<kDim>{};
                    exact.t0 = exact.t1 = t;
                    exact.y0 = exact.y1 = y;
                    exact.f1 = f;
                    for (auto& r : exact.rcont) r.fill(0.0);
                    exact.rcont[0] = y;
                } else {
                    exact = integrator::trial_step(t, y, f, tau, rhs, cfg);
                }
                const double g = ev(exact.y1);
                const double dg = ev.rate(exact.f1);
                if (std::abs(g) <= g_tol || dg == 0.0) break;
                const double tau_new = std::clamp(tau - g / dg, 0.0, tau_max);
                if (std::abs(tau_new - tau) < 1e-16) break;
                tau = tau_new;
            }
            emit_samples(exact, exact.t1, false);
            t = exact.t1;
            y = exact.y1;
            f = exact.f1;
            project();
            h = std::max(acc.h_next, cfg.initial_step);
            if (ev.kind == EventKind::DisplacementExtremum) {
                handle_extremum();
            } else {
                handle_diode_on(ev.polarity);
            }
            refresh_rhs();
        } else {
            emit_samples(step, step.t1, false);
            t = step.t1;
            y = step.y1;
            f = step.f1;
            h = acc.h_next;
            if (cp.motion_dir == 0 && std::abs(y[kZd]) > cfg.vel_tol) {
                cp.motion_dir = y[kZd] > 0.0 ? 1 : -1;
            }
            if (project()) {
                refresh_rhs();
            }
        }
        result.max_abs_h = std::max(result.max_abs_h, std::abs(y[kH]));
        for (double v : y) {
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "non-finite state at t=" << t;
                throw SimulationError(msg.str());
            }
        }
    }

    // Final sample exactly at t_end.
    if (options_.record_samples) {
        integrator::DenseStep<kDim> last;
        last.t0 = last.t1 = t;
        last.y0 = last.y1 = y;
        last.rcont[0] = y;
        emit_samples(last, t_end, true);
    }
    current_state();
    result.final = cp;
    return result;
}

}  // namespace pehsim
