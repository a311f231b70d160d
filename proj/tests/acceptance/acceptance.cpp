// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include "pehsim/config.hpp"
#include "pehsim/errors.hpp"
#include "pehsim/harness.hpp"
#include "pehsim/integrator.hpp"
#include "pehsim/mppt.hpp"
#include "pehsim/parallel.hpp"
#include "pehsim/sca.hpp"
#include "pehsim/transducer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pehsim;
using namespace pehsim::harness;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path work_dir() {
    const auto d = fs::temp_directory_path() / "pehsim_acceptance";
    fs::create_directories(d);
    return d;
}

Config base_config() {
    Config c = Config::load(fs::path(PEHSIM_SOURCE_DIR) / "configs/default.cfg");
    c.set("lut.path", (work_dir() / "lut.csv").string());
    return c;
}

// Shared across criteria; built once.
struct Context {
    Config cfg = base_config();
    std::shared_ptr<const sca::LutTable> lut;
    std::map<std::string, ScenarioRun> runs;

    Scenario scenario(const std::string& name) {
        Scenario sc = load_scenario(cfg, name);
        if (sc.options.sca_mode == ScaMode::AdaptiveLut) {
            if (!lut) {
                fs::remove(sc.lut_path);
                attach_lut(sc);
                lut = sc.options.lut;
            }
            sc.options.lut = lut;
        }
        return sc;
    }

    const ScenarioRun& run(const std::string& name) {
        auto it = runs.find(name);
        if (it == runs.end()) {
            it = runs.emplace(name, run_scenario(scenario(name), std::nullopt)).first;
        }
        return it->second;
    }
};

double mean_power(const std::vector<Sample>& s, double t0, double t1) {
    std::vector<powertrain::PowerSample> ps;
    for (const auto& x : s) {
        if (x.t >= t0 - 1e-12 && x.t <= t1 + 1e-12) ps.push_back({x.t, x.p_load});
    }
    return powertrain::net_energy(ps) / (ps.back().t - ps.front().t);
}

Outcome resonance() {
    HarvesterParams p;
    p.mech.theta = 0.0;
    p.bouc_wen.alpha = 1.0;
    p.sece.enabled = false;
    p.power.buck_enabled = false;
    p.mppt.enabled = false;
    std::vector<double> freqs;
    for (double f = 95.0; f <= 106.0 + 1e-9; f += 0.25) freqs.push_back(f);
    const auto amps = parallel_map(freqs, [&](double f) {
        RunOptions o;
        o.drive.f_const = f;
        o.duration = 1.2;
        o.record_samples = false;
        const auto r = Simulator(p, o).run();
        double a = 0.0;
        for (const auto& e : r.events) {
            if (e.kind == EventKind::DisplacementExtremum && e.t_event >= 1.0) {
                a = std::max(a, std::abs(e.state_before.z));
            }
        }
        return a;
    });
    const auto k = static_cast<std::size_t>(std::distance(amps.begin(), std::max_element(amps.begin(), amps.end())));
    const double fn = transducer::natural_frequency_hz(p.mech);
    return {std::abs(freqs[k] - fn) <= 0.25,
            fmt("peak at %.2f Hz, sqrt(k/m)/2pi = %.3f Hz", freqs[k], fn)};
}

Outcome mppt_efficiency(Context& ctx) {
    const auto& run = ctx.run("constant100");
    if (!run.report.mppt_efficiency) return {false, "oracle not configured"};
    const double mean = mean_power(run.result.samples, 2.0, 5.0);
    const double eff = mean / run.report.oracle_power_w;
    return {eff >= 0.93, fmt("mean P[2,5] %.5g W, oracle %.5g W at D=%.3f, ratio %.4f", mean,
                             run.report.oracle_power_w, run.report.oracle_duty, eff)};
}

Outcome load_step(Context& ctx) {
    const auto sc = ctx.scenario("constant100");
    const auto& run = ctx.run("constant100");
    const auto oracle = mpp_oracle(sc, 1.0, duty_grid(sc.params.power.d_min, sc.params.power.d_max,
                                                      sc.oracle.grid_step));
    // 10 ms moving average of the delivered power after the step
    const auto& s = run.result.samples;
    double t_reach = std::numeric_limits<double>::infinity();
    std::deque<double> win;
    double acc = 0.0;
    const std::size_t n_win = static_cast<std::size_t>(std::lround(0.01 * sc.options.sample_rate));
    for (const auto& x : s) {
        if (x.t < 1.0) continue;
        win.push_back(x.p_load);
        acc += x.p_load;
        if (win.size() > n_win) {
            acc -= win.front();
            win.pop_front();
        }
        if (win.size() == n_win && acc / static_cast<double>(n_win) >= 0.9 * oracle.p_star) {
            t_reach = x.t;
            break;
        }
    }
    int jumps = 0;
    for (const auto& t : run.result.ticks) {
        if (t.focv_jump && t.t >= 1.0 && t.t <= 1.0 + sc.params.mppt.focv_holdoff + 1e-12) ++jumps;
    }
    const bool ok = t_reach <= 1.5 && jumps == 1;
    return {ok, fmt("post-step oracle %.5g W at D=%.3f; 90%% reached at t=%.4g s; FOCV jumps in [1, 1.1]: %d",
                    oracle.p_star, oracle.d_star, t_reach, jumps)};
}

Outcome sca_gain(Context& ctx) {
    auto gain = [&](const std::string& f) {
        const double a = ctx.run("detuned" + f + "_fixed").report.net_energy_j;
        const double b = ctx.run("detuned" + f + "_adaptive").report.net_energy_j;
        return (b - a) / a;
    };
    const double g90 = gain("90"), g110 = gain("110");
    const double a100 = ctx.run("constant100").report.net_energy_j;
    const double b100 = ctx.run("constant100_adaptive").report.net_energy_j;
    const double g100 = (b100 - a100) / a100;
    const auto sc = ctx.scenario("detuned90_adaptive");
    const auto settings = sca::enumerate_settings(sc.params.bank, sc.params.c_p);
    const auto& s90 = sca::retune(90.0, *ctx.lut, settings);
    const auto& s110 = sca::retune(110.0, *ctx.lut, settings);
    const bool ok = g90 >= 0.30 && g110 >= 0.30 && std::abs(g100) <= 0.05 &&
                    s90.topology == sca::Topology::Series && s110.topology == sca::Topology::Parallel;
    return {ok, fmt("gain 90 Hz %+.1f%%, 110 Hz %+.1f%%, 100 Hz %+.2f%%; setting 90 Hz %s, 110 Hz %s",
                    100 * g90, 100 * g110, 100 * g100, s90.label().c_str(), s110.label().c_str())};
}

Outcome variable_profile(Context& ctx) {
    const double a = ctx.run("variable_fixed").report.net_energy_j;
    const double b = ctx.run("variable_adaptive").report.net_energy_j;
    return {b >= a, fmt("fixed %.5g J, adaptive %.5g J (%+.1f%%)", a, b, 100 * (b - a) / a)};
}

Outcome sece_timing(Context& ctx) {
    const auto sc = ctx.scenario("constant100");
    const auto& r = ctx.run("constant100").result;
    double worst = 0.0;
    int count = 0;
    for (const auto& e : r.events) {
        if (e.kind != EventKind::DisplacementExtremum || !e.extraction) continue;
        worst = std::max(worst, std::abs(e.state_before.z_dot));
        if (e.t_event >= 1.0 && e.t_event <= 5.0) ++count;
    }
    const bool ok = worst <= sc.params.solver.vel_tol && std::abs(count - 800) <= 2;
    return {ok, fmt("max |z_dot| at extraction %.3g m/s; %d extractions in [1, 5] s", worst, count)};
}

Outcome energy_ledger(Context& ctx) {
    double worst = 0.0;
    std::string at;
    for (const auto& name : scenario_names(ctx.cfg)) {
        const auto& rep = ctx.run(name).report;
        const double rel = std::abs(rep.energy_residual_j) / rep.work_in_j;
        if (rel >= worst) {
            worst = rel;
            at = name;
        }
    }
    return {worst <= 0.02, fmt("worst residual %.3g of input work (%s)", worst, at.c_str())};
}

Outcome hysteresis(Context& ctx) {
    auto loop = [&](double alpha) {
        Scenario sc = ctx.scenario("constant100");
        sc.params.bouc_wen.alpha = alpha;
        sc.options.duration = 1.0;
        sc.options.sample_rate = 50e3;
        const auto r = Simulator(sc.params, sc.options).run();
        const double kh = (1.0 - alpha) * sc.params.mech.stiffness;
        std::vector<transducer::LoopPoint> pts;
        std::vector<transducer::PowerPoint> pw;
        for (const auto& s : r.samples) {
            pts.push_back({s.z, kh * s.h});
            pw.push_back({s.t, s.z, kh * s.h * s.z_dot});
        }
        return std::pair{transducer::hysteresis_loop_area(pts), transducer::cycle_energy(pw)};
    };
    const auto [a1, e1] = loop(1.0);
    const auto [a85, e85] = loop(0.85);
    const double rel = std::abs(a85 - e85) / e85;
    const bool ok = std::abs(a1) <= 1e-9 && a85 > 0.0 && rel <= 0.01;
    (void)e1;
    return {ok, fmt("alpha=1 area %.3g J; alpha=0.85 area %.6g J vs dissipated %.6g J (%.3g%%)", a1,
                    a85, e85, 100 * rel)};
}

Outcome oracle_equivalence() {
    const sca::CapacitorBank bank;
    const auto settings = sca::enumerate_settings(bank, 15e-9);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(1e-9, 80e-9);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const double c = u(rng);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : settings) best = std::min(best, std::abs(s.c_effective - c));
        if (std::abs(sca::snap_to_realizable(c, settings).c_effective - c) != best) ++mismatches;
    }

    mppt::MpptConfig cfg;
    const double d_star = 0.4;
    auto src = [&](double d) { return 0.2 - (d - d_star) * (d - d_star); };
    auto st = mppt::initial_state(cfg, 0.01, 0.95);
    for (int k = 0; k < 50; ++k) {
        st = mppt::controller_tick({40.0, 0.0, src(st.duty)}, st, cfg, k * cfg.control_period, 0.01, 0.95);
    }
    const double err = std::abs(st.duty - d_star);
    const bool ok = mismatches == 0 && err <= cfg.step_max;
    return {ok, fmt("snap mismatches %d/1000; P&O |D - D*| after 50 ticks %.4f", mismatches, err)};
}

Outcome integrator_validation(Context& ctx) {
    using integrator::Vec;
    integrator::SolverConfig loose;
    loose.max_step = 0.1;
    auto decay = [](double, const Vec<1>& y, Vec<1>& dy) { dy[0] = -y[0]; };
    const double e_decay = std::abs(integrator::integrate(0.0, 1.0, Vec<1>{1.0}, decay, loose)[0] -
                                    std::exp(-1.0)) / std::exp(-1.0);

    const double w = 2.0 * std::numbers::pi * 100.0;
    auto osc = [w](double, const Vec<2>& y, Vec<2>& dy) {
        dy[0] = y[1];
        dy[1] = -w * w * y[0];
    };
    auto energy = [w](const Vec<2>& y) { return 0.5 * y[1] * y[1] + 0.5 * w * w * y[0] * y[0]; };
    const Vec<2> y0{1e-3, 0.0};
    const auto y1 = integrator::integrate(0.0, 0.1, y0, osc, integrator::SolverConfig{});
    const double e_osc = std::abs(energy(y1) - energy(y0)) / energy(y0);

    const double lam = 1e6;
    auto stiff = [lam](double t, const Vec<1>& y, Vec<1>& dy) { dy[0] = -lam * (y[0] - std::cos(t)); };
    const double exact = (lam * lam * std::cos(0.5) + lam * std::sin(0.5)) / (lam * lam + 1.0);
    const double e_stiff = std::abs(integrator::integrate(0.0, 0.5, Vec<1>{0.0}, stiff, loose)[0] - exact);

    Scenario sc = ctx.scenario("constant100");
    sc.oracle.freeze_at.reset();
    Scenario tight = sc;
    tight.params.solver.rel_tol *= 0.5;
    tight.params.solver.abs_tol *= 0.5;
    const double e_a = ctx.run("constant100").report.net_energy_j;
    const double e_b = run_scenario(tight, std::nullopt).report.net_energy_j;
    const double drift = std::abs(e_b - e_a) / e_a;
    const bool ok = e_decay < 1e-5 && e_osc < 1e-4 && e_stiff < 1e-4 && drift < 1e-3;
    return {ok, fmt("decay rel err %.2g, oscillator energy drift %.2g, stiff abs err %.2g, "
                    "net energy change at half tolerance %.3g%%",
                    e_decay, e_osc, e_stiff, 100 * drift)};
}

Outcome determinism(Context& ctx) {
    Scenario sc = ctx.scenario("variable_adaptive");
    sc.oracle.freeze_at.reset();
    const auto d = work_dir();
    (void)run_scenario(sc, d / "det_a");
    (void)run_scenario(sc, d / "det_b");
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    const auto a = slurp(d / "det_a" / "timeseries.csv");
    const auto b = slurp(d / "det_b" / "timeseries.csv");
    return {!a.empty() && a == b, fmt("%zu bytes, identical: %s", a.size(), a == b ? "yes" : "no")};
}

}  // namespace

int main() {
    Context ctx;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"resonance identity", [] { return resonance(); }},
        {"MPPT efficiency", [&] { return mppt_efficiency(ctx); }},
        {"load-step robustness", [&] { return load_step(ctx); }},
        {"SCA gain trend", [&] { return sca_gain(ctx); }},
        {"adaptive dominance, variable profile", [&] { return variable_profile(ctx); }},
        {"SECE timing and counting", [&] { return sece_timing(ctx); }},
        {"energy ledger", [&] { return energy_ledger(ctx); }},
        {"hysteresis loop", [&] { return hysteresis(ctx); }},
        {"oracle equivalences", [] { return oracle_equivalence(); }},
        {"integrator validation", [&] { return integrator_validation(ctx); }},
        {"determinism", [&] { return determinism(ctx); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("criterion %2zu %-38s %s  %s  [%.1f s]\n", i + 1, criteria[i].first.c_str(),
                    o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
