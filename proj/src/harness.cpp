#include "pehsim/harness.hpp"

#include "pehsim/errors.hpp"
#include "pehsim/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pehsim::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Looks keys up with scenario overrides and remembers which ones were read,
// so that leftovers can be reported as unknown.
class Resolver {
public:
    Resolver(const Config& cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {}

    std::optional<std::string> get(const std::string& key) {
        used_.insert(key);
        if (!name_.empty()) {
            if (auto v = cfg_.raw(override_key(key))) {
                where_ = location(override_key(key));
                return v;
            }
        }
        where_ = location(key);
        return cfg_.raw(key);
    }

    double num(const std::string& key, double fallback) {
        const auto v = get(key);
        const double out = v ? parse_double(*v, where_) : fallback;
        echo_.emplace_back(key, v ? *v : fmt_double(fallback));
        return out;
    }
    bool flag(const std::string& key, bool fallback) {
        const auto v = get(key);
        const bool out = v ? parse_bool(*v, where_) : fallback;
        echo_.emplace_back(key, out ? "true" : "false");
        return out;
    }
    std::string word(const std::string& key, const std::string& fallback) {
        const auto v = get(key);
        echo_.emplace_back(key, v ? *v : fallback);
        return v ? *v : fallback;
    }
    std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
        const auto v = get(key);
        if (!v) {
            echo_.emplace_back(key, std::to_string(fallback));
            return fallback;
        }
        const auto n = parse_int(*v, where_);
        if (n < 0) {
            throw ConfigError(where_ + ": must be >= 0");
        }
        echo_.emplace_back(key, *v);
        return static_cast<std::uint64_t>(n);
    }
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
        const auto v = get(key);
        if (!v) {
            std::string text;
            for (std::size_t i = 0; i < fallback.size(); ++i) {
                text += (i ? "," : "") + fmt_double(fallback[i]);
            }
            echo_.emplace_back(key, text);
            return fallback;
        }
        echo_.emplace_back(key, *v);
        return parse_double_list(*v, where_);
    }
    [[nodiscard]] const std::string& where() const { return where_; }

    void finish() const {
        const std::string own = name_.empty() ? "" : "scenario." + name_ + ".";
        for (const auto& k : cfg_.keys()) {
            if (k.rfind("scenario.", 0) == 0) {
                if (!own.empty() && k.rfind(own, 0) == 0 && !used_.contains(k.substr(own.size()))) {
                    throw ConfigError(location(k) + ": unknown key '" + k.substr(own.size()) +
                                      "' in scenario '" + name_ + "'");
                }
                continue;
            }
            if (!used_.contains(k)) {
                throw ConfigError(location(k) + ": unknown key '" + k + "'");
            }
        }
    }

    std::vector<std::pair<std::string, std::string>> take_echo() { return std::move(echo_); }

private:
    [[nodiscard]] std::string override_key(const std::string& key) const {
        return "scenario." + name_ + "." + key;
    }
    [[nodiscard]] std::string location(const std::string& key) const {
        std::ostringstream s;
        s << cfg_.source();
        if (const int line = cfg_.line_of(key); line > 0) {
            s << ":" << line;
        }
        s << ": key '" << key << "'";
        return s.str();
    }

    const Config& cfg_;
    std::string name_;
    std::set<std::string> used_;
    std::string where_;
    std::vector<std::pair<std::string, std::string>> echo_;
};

constexpr std::array<const char*, kEventKindCount> kEventKeys = {
    "displacement_extremum", "diode_on",  "diode_off",
    "controller_tick",       "load_step", "lut_retune",
};

}  // namespace

std::vector<std::string> scenario_names(const Config& cfg) {
    std::set<std::string> names;
    for (const auto& k : cfg.keys()) {
        if (k.rfind("scenario.", 0) != 0) {
            continue;
        }
        const auto rest = k.substr(9);
        const auto dot = rest.find('.');
        if (dot != std::string::npos && dot > 0) {
            names.insert(rest.substr(0, dot));
        }
    }
    return {names.begin(), names.end()};
}

Scenario load_scenario(const Config& cfg, const std::string& name,
                       std::optional<std::uint64_t> seed) {
    if (!name.empty()) {
        const auto names = scenario_names(cfg);
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            std::string avail;
            for (const auto& n : names) avail += (avail.empty() ? "" : ", ") + n;
            throw ConfigError("unknown scenario '" + name + "' in " + cfg.source() +
                              " (available: " + (avail.empty() ? "none" : avail) + ")");
        }
    }
    Resolver r(cfg, name);
    Scenario sc;
    sc.name = name.empty() ? "base" : name;
    auto& p = sc.params;

    p.mech.mass = r.num("transducer.mass", p.mech.mass);
    p.mech.damping = r.num("transducer.damping", p.mech.damping);
    p.mech.stiffness = r.num("transducer.stiffness", p.mech.stiffness);
    p.mech.theta = r.num("transducer.theta", p.mech.theta);
    p.c_p = r.num("transducer.c_p", p.c_p);

    p.bouc_wen.alpha = r.num("bouc_wen.alpha", p.bouc_wen.alpha);
    p.bouc_wen.a = r.num("bouc_wen.a", p.bouc_wen.a);
    p.bouc_wen.beta = r.num("bouc_wen.beta", p.bouc_wen.beta);
    p.bouc_wen.gamma = r.num("bouc_wen.gamma", p.bouc_wen.gamma);
    p.bouc_wen.n = r.num("bouc_wen.n", p.bouc_wen.n);
    p.bouc_wen.z_ref = r.num("bouc_wen.z_ref", p.bouc_wen.z_ref);

    p.sece.l_sece = r.num("sece.l_sece", p.sece.l_sece);
    p.sece.c_rect = r.num("sece.c_rect", p.sece.c_rect);
    p.sece.eta = r.num("sece.eta", p.sece.eta);
    p.sece.v_diode = r.num("sece.v_diode", p.sece.v_diode);
    p.sece.arm_threshold_z = r.num("sece.arm_threshold_z", p.sece.arm_threshold_z);
    p.sece.enabled = r.flag("sece.enabled", p.sece.enabled);

    p.power.c_storage = r.num("power.c_storage", p.power.c_storage);
    p.power.r_load = r.num("power.r_load", p.power.r_load);
    p.power.r_load_after_step = r.num("power.r_load_after_step", p.power.r_load_after_step);
    p.power.t_load_step = r.num("power.t_load_step", p.power.t_load_step);
    p.power.l_buck = r.num("power.l_buck", p.power.l_buck);
    p.power.c_out = r.num("power.c_out", p.power.c_out);
    p.power.d_min = r.num("power.d_min", p.power.d_min);
    p.power.d_max = r.num("power.d_max", p.power.d_max);
    p.power.buck_enabled = r.flag("power.buck_enabled", p.power.buck_enabled);

    p.mppt.k_focv = r.num("mppt.k_focv", p.mppt.k_focv);
    p.mppt.control_period = r.num("mppt.control_period", p.mppt.control_period);
    p.mppt.step_init = r.num("mppt.step_init", p.mppt.step_init);
    p.mppt.step_min = r.num("mppt.step_min", p.mppt.step_min);
    p.mppt.step_max = r.num("mppt.step_max", p.mppt.step_max);
    p.mppt.step_gain = r.num("mppt.step_gain", p.mppt.step_gain);
    p.mppt.step_saturation = r.num("mppt.step_saturation", p.mppt.step_saturation);
    p.mppt.power_drop_ratio = r.num("mppt.power_drop_ratio", p.mppt.power_drop_ratio);
    p.mppt.focv_holdoff = r.num("mppt.focv_holdoff", p.mppt.focv_holdoff);
    p.mppt.d_init = r.num("mppt.d_init", p.mppt.d_init);
    p.mppt.enabled = r.flag("mppt.enabled", p.mppt.enabled);

    p.bank.values = r.list("sca.bank", p.bank.values);

    p.solver.rel_tol = r.num("solver.rel_tol", p.solver.rel_tol);
    p.solver.abs_tol = r.num("solver.abs_tol", p.solver.abs_tol);
    p.solver.max_step = r.num("solver.max_step", p.solver.max_step);
    p.solver.event_tol = r.num("solver.event_tol", p.solver.event_tol);
    p.solver.vel_tol = r.num("solver.vel_tol", p.solver.vel_tol);
    p.solver.min_step = r.num("solver.min_step", p.solver.min_step);
    p.solver.initial_step = r.num("solver.initial_step", p.solver.initial_step);

    auto& o = sc.options;
    auto& d = o.drive;
    const std::string kind = r.word("drive.kind", "constant");
    if (kind == "constant") {
        d.kind = excitation::DriveKind::ConstantFreq;
    } else if (kind == "variable") {
        d.kind = excitation::DriveKind::VariablePath;
    } else {
        throw ConfigError(r.where() + ": expected 'constant' or 'variable', got '" + kind + "'");
    }
    d.f0 = r.num("drive.f0", d.f0);
    d.f_const = r.num("drive.f_const", d.f_const);
    d.f_center = r.num("drive.f_center", d.f_center);
    d.f_span = r.num("drive.f_span", d.f_span);
    d.path_rate = r.num("drive.path_rate", d.path_rate);
    d.path_warp_rate = r.num("drive.path_warp_rate", d.path_warp_rate);
    d.path_warp_depth = r.num("drive.path_warp_depth", d.path_warp_depth);
    d.noise_enabled = r.flag("drive.noise", d.noise_enabled);
    d.noise_rms = r.num("drive.noise_rms", 0.05 * d.f0);
    d.noise_cutoff_hz = r.num("drive.noise_cutoff_hz", d.noise_cutoff_hz);
    d.noise_lattice_hz = r.num("drive.noise_lattice_hz", d.noise_lattice_hz);
    d.seed = r.uint("drive.seed", d.seed);
    if (seed) {
        d.seed = *seed;
        sc.echo.emplace_back("drive.seed(cli)", std::to_string(*seed));
    }

    const std::string mode = r.word("sca.mode", "fixed_bypass");
    if (mode == "fixed_bypass") {
        o.sca_mode = ScaMode::FixedBypass;
    } else if (mode == "adaptive_lut") {
        o.sca_mode = ScaMode::AdaptiveLut;
    } else {
        throw ConfigError(r.where() + ": expected 'fixed_bypass' or 'adaptive_lut', got '" + mode + "'");
    }
    o.retune_period = r.num("sca.retune_period", o.retune_period);
    o.duration = r.num("run.duration", o.duration);
    o.sample_rate = r.num("run.sample_rate", o.sample_rate);

    const std::string lut = r.word("lut.path", "lut.csv");
    sc.lut_path = fs::path(lut).is_absolute() ? fs::path(lut) : cfg.base_dir() / lut;
    sc.build_lut_if_missing = r.flag("lut.build_if_missing", sc.build_lut_if_missing);
    sc.lut_build.f_min = r.num("lut.f_min", sc.lut_build.f_min);
    sc.lut_build.f_max = r.num("lut.f_max", sc.lut_build.f_max);
    sc.lut_build.grid_step = r.num("lut.grid_step", sc.lut_build.grid_step);
    sc.lut_build.settle = r.num("lut.settle", sc.lut_build.settle);
    sc.lut_build.window = r.num("lut.window", sc.lut_build.window);

    sc.oracle.window = r.num("oracle.window", sc.oracle.window);
    sc.oracle.grid_step = r.num("oracle.grid_step", sc.oracle.grid_step);
    if (r.get("oracle.freeze_at")) {
        sc.oracle.freeze_at = r.num("oracle.freeze_at", 0.0);
    }

    r.finish();
    auto echo = r.take_echo();
    echo.insert(echo.end(), sc.echo.begin(), sc.echo.end());
    sc.echo = std::move(echo);

    // Fail early with config-level messages.
    validate(sc.params);
    excitation::validate(sc.options.drive);
    if (!(o.duration > 0.0)) throw ConfigError("run.duration must be > 0");
    if (!(o.sample_rate > 0.0)) throw ConfigError("run.sample_rate must be > 0");
    if (!(o.retune_period > 0.0)) throw ConfigError("sca.retune_period must be > 0");
    if (!(sc.lut_build.grid_step > 0.0) || !(sc.lut_build.f_max >= sc.lut_build.f_min) ||
        !(sc.lut_build.window > 0.0) || !(sc.lut_build.settle >= 0.0)) {
        throw ConfigError("lut: require grid_step > 0, f_max >= f_min, window > 0, settle >= 0");
    }
    if (!(sc.oracle.window > 0.0) || !(sc.oracle.grid_step > 0.0 && sc.oracle.grid_step <= 0.005)) {
        throw ConfigError("oracle: require window > 0 and 0 < grid_step <= 0.005");
    }
    if (sc.oracle.freeze_at && !(*sc.oracle.freeze_at >= 0.0 && *sc.oracle.freeze_at < o.duration)) {
        throw ConfigError("oracle.freeze_at must lie in [0, run.duration)");
    }
    return sc;
}

void attach_lut(Scenario& sc) {
    if (sc.options.sca_mode != ScaMode::AdaptiveLut || sc.options.lut) {
        return;
    }
    if (fs::exists(sc.lut_path)) {
        sc.options.lut = std::make_shared<const sca::LutTable>(sca::read_lut(sc.lut_path));
        return;
    }
    if (!sc.build_lut_if_missing) {
        throw ConfigError("adaptive_lut scenario '" + sc.name + "' needs LUT file '" +
                          sc.lut_path.string() + "' (missing; set lut.build_if_missing = true or run build-lut)");
    }
    const auto settings = sca::enumerate_settings(sc.params.bank, sc.params.c_p);
    auto built = build_lut(sc, frequency_grid(sc.lut_build), settings, sc.lut_build);
    if (sc.lut_path.has_parent_path()) {
        fs::create_directories(sc.lut_path.parent_path());
    }
    sca::write_lut(built.table, sc.lut_path);
    sc.options.lut = std::make_shared<const sca::LutTable>(std::move(built.table));
}

RunReport make_report(const Scenario& sc, const RunResult& result) {
    RunReport rep;
    rep.scenario = sc.name;
    rep.seed = sc.options.drive.seed;
    rep.sca_mode = to_string(sc.options.sca_mode);
    rep.duration = sc.options.duration;
    if (!result.samples.empty()) {
        std::vector<powertrain::PowerSample> ps;
        ps.reserve(result.samples.size());
        for (const auto& s : result.samples) ps.push_back({s.t, s.p_load});
        rep.net_energy_j = powertrain::net_energy(ps);
    } else {
        rep.net_energy_j = result.final.ledger.load;
    }
    rep.mean_power_w = rep.net_energy_j / sc.options.duration;
    rep.extraction_count = result.final.extraction_count;
    if (!result.samples.empty()) {
        const double kh = (1.0 - sc.params.bouc_wen.alpha) * sc.params.mech.stiffness;
        std::vector<transducer::LoopPoint> loop;
        loop.reserve(result.samples.size());
        for (const auto& s : result.samples) loop.push_back({s.z, kh * s.h});
        try {
            rep.hysteresis_loop_area_j = transducer::hysteresis_loop_area(loop);
        } catch (const InsufficientCycle&) {
            rep.hysteresis_loop_area_j = 0.0;
        }
    }
    rep.event_counts = result.event_counts;
    rep.focv_jumps = result.focv_jumps;
    rep.retune_changes = result.retune_changes;
    rep.work_in_j = result.final.ledger.work_in;
    rep.energy_residual_j = energy_residual(sc.params, Checkpoint{}, result.final);
    rep.sece_delivered_j = result.final.ledger.sece_delivered;
    rep.sece_available_j = result.final.ledger.sece_available;
    rep.final_v_storage = result.final.state.v_storage;
    rep.final_duty = result.final.controller.duty;
    rep.config_echo = sc.echo;
    return rep;
}

ScenarioRun run_scenario(const Scenario& sc, const std::optional<fs::path>& out_dir) {
    Scenario local = sc;
    attach_lut(local);
    RunOptions opts = local.options;
    if (local.oracle.freeze_at) {
        opts.snapshot_times.push_back(*local.oracle.freeze_at);
    }
    Simulator sim(local.params, opts);
    ScenarioRun out;
    out.result = sim.run();
    out.report = make_report(local, out.result);
    if (local.oracle.freeze_at) {
        const Checkpoint* frozen = nullptr;
        for (const auto& cp : out.result.snapshots) {
            if (cp.state.t == *local.oracle.freeze_at) frozen = &cp;
        }
        if (frozen == nullptr) {
            throw SimulationError("oracle freeze snapshot was not captured");
        }
        const auto duties =
            duty_grid(local.params.power.d_min, local.params.power.d_max, local.oracle.grid_step);
        const auto oracle = mpp_oracle_from(local, *frozen, duties);
        const double span = local.options.duration - frozen->state.t;
        const double mean = (out.result.final.ledger.load - frozen->ledger.load) / span;
        out.report.oracle_power_w = oracle.p_star;
        out.report.oracle_duty = oracle.d_star;
        out.report.mppt_efficiency = mppt::mppt_efficiency(mean, oracle.p_star);
    }
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_timeseries(out.result.samples, *out_dir / "timeseries.csv");
        write_report(out.report, *out_dir / "report.txt");
    }
    return out;
}

RunReport run_scenario(const fs::path& cfg_path, const std::string& name, const fs::path& out_dir,
                       std::optional<std::uint64_t> seed) {
    const Config cfg = Config::load(cfg_path);
    Scenario sc = load_scenario(cfg, name, seed);
    return run_scenario(sc, out_dir).report;
}

void write_timeseries(const std::vector<Sample>& samples, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << kCsvHeader << '\n';
    std::string line;
    char buf[40];
    for (const auto& s : samples) {
        line.clear();
        for (double v : {s.t, s.z, s.z_dot, s.h, s.v_p, s.v_rect, s.v_storage, s.i_l, s.v_out,
                         s.p_load, s.duty, s.f_drive, s.c_effective}) {
            std::snprintf(buf, sizeof buf, "%.17g,", v);
            line += buf;
        }
        line += std::to_string(s.event_flags);
        line += '\n';
        out << line;
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

std::vector<Sample> read_timeseries(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw IoError("'" + path.string() + "': unexpected timeseries header");
    }
    std::vector<Sample> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::array<double, 13> v{};
        std::size_t pos = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto comma = line.find(',', pos);
            if (comma == std::string::npos) {
                throw IoError("'" + path.string() + "' row " + std::to_string(row) + ": too few columns");
            }
            v[i] = parse_double(line.substr(pos, comma - pos), "timeseries row " + std::to_string(row));
            pos = comma + 1;
        }
        Sample s{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12],
                 static_cast<std::uint32_t>(parse_int(line.substr(pos), "timeseries flags"))};
        out.push_back(s);
    }
    return out;
}

void write_report(const RunReport& r, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
    kv("scenario", r.scenario);
    kv("seed", std::to_string(r.seed));
    kv("sca_mode", r.sca_mode);
    kv("duration_s", fmt_double(r.duration));
    kv("net_energy_j", fmt_double(r.net_energy_j));
    kv("mean_power_w", fmt_double(r.mean_power_w));
    if (r.mppt_efficiency) {
        kv("mppt_efficiency", fmt_double(*r.mppt_efficiency));
        kv("oracle_power_w", fmt_double(r.oracle_power_w));
        kv("oracle_duty", fmt_double(r.oracle_duty));
    }
    kv("extraction_count", std::to_string(r.extraction_count));
    kv("hysteresis_loop_area_j_per_cycle", fmt_double(r.hysteresis_loop_area_j));
    for (std::size_t i = 0; i < kEventKindCount; ++i) {
        kv(std::string("events.") + kEventKeys[i], std::to_string(r.event_counts[i]));
    }
    kv("focv_jumps", std::to_string(r.focv_jumps));
    kv("retune_changes", std::to_string(r.retune_changes));
    kv("work_in_j", fmt_double(r.work_in_j));
    kv("energy_residual_j", fmt_double(r.energy_residual_j));
    kv("sece_delivered_j", fmt_double(r.sece_delivered_j));
    kv("sece_available_j", fmt_double(r.sece_available_j));
    kv("final_v_storage", fmt_double(r.final_v_storage));
    kv("final_duty", fmt_double(r.final_duty));
    for (const auto& [k, v] : r.config_echo) {
        kv("config." + k, v);
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

Config read_report(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open report '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return Config::parse(buf.str(), path.string());
}

Comparison compare(const Config& a, const Config& b) {
    auto need = [](const Config& c, const std::string& k) {
        const auto v = c.raw(k);
        if (!v) {
            throw ConfigError(c.source() + ": report lacks '" + k + "'");
        }
        return *v;
    };
    if (need(a, "seed") != need(b, "seed")) {
        throw MismatchedScenarios("drive seeds differ (" + need(a, "seed") + " vs " + need(b, "seed") + ")");
    }
    if (parse_double(need(a, "duration_s"), "duration_s") !=
        parse_double(need(b, "duration_s"), "duration_s")) {
        throw MismatchedScenarios("run durations differ");
    }
    Comparison c;
    c.scenario_a = need(a, "scenario");
    c.scenario_b = need(b, "scenario");
    c.energy_a = parse_double(need(a, "net_energy_j"), "net_energy_j");
    c.energy_b = parse_double(need(b, "net_energy_j"), "net_energy_j");
    if (c.energy_a != 0.0) {
        c.gain = (c.energy_b - c.energy_a) / c.energy_a;
    } else {
        c.gain = c.energy_b == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    for (const char* m : {"net_energy_j", "mean_power_w", "mppt_efficiency", "extraction_count",
                          "hysteresis_loop_area_j_per_cycle", "focv_jumps", "retune_changes",
                          "work_in_j", "sece_delivered_j", "final_v_storage", "final_duty"}) {
        const auto va = a.raw(m);
        const auto vb = b.raw(m);
        if (!va || !vb) continue;
        const double x = parse_double(*va, m);
        const double y = parse_double(*vb, m);
        c.deltas.push_back({m, x, y, y - x});
    }
    return c;
}

Comparison compare(const fs::path& dir_a, const fs::path& dir_b) {
    return compare(read_report(dir_a / "report.txt"), read_report(dir_b / "report.txt"));
}

std::vector<double> duty_grid(double d_min, double d_max, double step) {
    if (!(step > 0.0) || !(d_max >= d_min)) {
        throw ConfigError("duty grid: require step > 0 and d_max >= d_min");
    }
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double d = d_min + static_cast<double>(i) * step;
        if (d > d_max - 1e-12) break;
        out.push_back(d);
    }
    out.push_back(d_max);
    return out;
}

OracleResult mpp_oracle_from(const Scenario& sc, const Checkpoint& frozen,
                             const std::vector<double>& duties) {
    Scenario local = sc;
    attach_lut(local);
    const double window = local.oracle.window;
    const auto powers = parallel_map(duties, [&](double d) {
        RunOptions o = local.options;
        o.fixed_duty = d;
        o.duration = frozen.state.t + window;
        o.record_samples = false;
        o.record_events = false;
        o.snapshot_times.clear();
        Simulator sim(local.params, o);
        const auto r = sim.run_from(frozen);
        return (r.final.ledger.load - frozen.ledger.load) / window;
    });
    OracleResult out;
    out.t_freeze = frozen.state.t;
    out.duties = duties;
    out.powers = powers;
    std::size_t best = 0;
    for (std::size_t i = 1; i < powers.size(); ++i) {
        if (powers[i] > powers[best]) best = i;
    }
    out.d_star = duties[best];
    out.p_star = powers[best];
    return out;
}

OracleResult mpp_oracle(const Scenario& sc, double t_freeze, const std::vector<double>& duties) {
    Scenario local = sc;
    attach_lut(local);
    RunOptions o = local.options;
    o.duration = t_freeze;
    o.record_samples = false;
    o.record_events = false;
    o.snapshot_times = {t_freeze};
    Checkpoint frozen;
    if (t_freeze > 0.0) {
        Simulator sim(local.params, o);
        const auto r = sim.run();
        if (r.snapshots.empty()) {
            throw SimulationError("oracle freeze snapshot was not captured");
        }
        frozen = r.snapshots.back();
    } else {
        o.duration = local.oracle.window;
        frozen = Simulator(local.params, o).initial_checkpoint();
    }
    return mpp_oracle_from(local, frozen, duties);
}

std::vector<double> frequency_grid(const LutBuildOptions& opt) {
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double f = opt.f_min + static_cast<double>(i) * opt.grid_step;
        if (f > opt.f_max + 1e-9) break;
        out.push_back(f);
    }
    return out;
}

LutBuild build_lut(const Scenario& base, const std::vector<double>& freqs,
                   const std::vector<sca::ScaSetting>& settings, const LutBuildOptions& opt) {
    if (freqs.empty() || settings.empty()) {
        throw ConfigError("build_lut: frequency grid and settings must be non-empty");
    }
    struct Cell {
        std::size_t fi;
        std::size_t si;
    };
    std::vector<Cell> cells;
    cells.reserve(freqs.size() * settings.size());
    for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
        for (std::size_t si = 0; si < settings.size(); ++si) cells.push_back({fi, si});
    }
    HarvesterParams params = base.params;
    params.power.buck_enabled = false;
    const auto powers = parallel_map(cells, [&](const Cell& c) {
        RunOptions o;
        o.drive = base.options.drive;
        o.drive.kind = excitation::DriveKind::ConstantFreq;
        o.drive.f_const = freqs[c.fi];
        o.drive.noise_enabled = false;
        o.duration = opt.settle + opt.window;
        o.sca_mode = ScaMode::FixedBypass;
        o.fixed_c_effective = settings[c.si].c_effective;
        o.record_samples = false;
        o.record_events = false;
        o.snapshot_times = {opt.settle};
        Simulator sim(params, o);
        const auto r = sim.run();
        const double start = opt.settle > 0.0 ? r.snapshots.at(0).ledger.sece_delivered : 0.0;
        return (r.final.ledger.sece_delivered - start) / opt.window;
    });

    LutBuild out;
    out.freqs = freqs;
    out.settings = settings;
    out.power.assign(freqs.size(), std::vector<double>(settings.size(), 0.0));
    std::vector<sca::LutEntry> entries;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out.power[cells[i].fi][cells[i].si] = powers[i];
    }
    for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
        const auto& row = out.power[fi];
        std::size_t best = 0;
        for (std::size_t si = 1; si < row.size(); ++si) {
            if (row[si] > row[best]) best = si;
        }
        if (!(row[best] > 0.0)) {
            std::ostringstream msg;
            msg << "build_lut: every setting delivers zero power at " << freqs[fi] << " Hz";
            throw DegenerateSweep(msg.str());
        }
        out.winner.push_back(best);
        entries.push_back({freqs[fi], settings[best].c_effective});
    }
    out.table = sca::LutTable(std::move(entries));
    return out;
}

}  // namespace pehsim::harness
