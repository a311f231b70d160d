// sim: command-line front end for scenario runs, LUT building, report
// comparison and the fixed-duty power oracle.

#include "pehsim/errors.hpp"
#include "pehsim/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace pehsim;
namespace fs = std::filesystem;

int cmd_run(const fs::path& cfg_path, const std::string& scenario, const fs::path& out,
            std::optional<std::uint64_t> seed) {
    const auto rep = harness::run_scenario(cfg_path, scenario, out, seed);
    std::printf("scenario %s (%s, seed %llu): net energy %.6g J, mean power %.6g W, %llu extractions\n",
                rep.scenario.c_str(), rep.sca_mode.c_str(),
                static_cast<unsigned long long>(rep.seed), rep.net_energy_j, rep.mean_power_w,
                static_cast<unsigned long long>(rep.extraction_count));
    if (rep.mppt_efficiency) {
        std::printf("mppt efficiency %.4f (oracle %.6g W at D=%.3f)\n", *rep.mppt_efficiency,
                    rep.oracle_power_w, rep.oracle_duty);
    }
    std::printf("wrote %s\n", (out / "report.txt").string().c_str());
    return 0;
}

int cmd_build_lut(const fs::path& cfg_path, const std::string& scenario, const fs::path& out) {
    const Config cfg = Config::load(cfg_path);
    const auto sc = harness::load_scenario(cfg, scenario);
    const auto settings = sca::enumerate_settings(sc.params.bank, sc.params.c_p);
    const auto built =
        harness::build_lut(sc, harness::frequency_grid(sc.lut_build), settings, sc.lut_build);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    sca::write_lut(built.table, out);
    for (std::size_t i = 0; i < built.freqs.size(); ++i) {
        const auto& w = built.settings[built.winner[i]];
        std::printf("%7.2f Hz  %-18s C_eff %.4g nF  P %.6g W\n", built.freqs[i], w.label().c_str(),
                    w.c_effective * 1e9, built.power[i][built.winner[i]]);
    }
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
}

int cmd_compare(const fs::path& a, const fs::path& b) {
    const auto c = harness::compare(a, b);
    std::printf("a: %s  b: %s\n", c.scenario_a.c_str(), c.scenario_b.c_str());
    for (const auto& d : c.deltas) {
        std::printf("%-34s %14.6g %14.6g %+14.6g\n", d.metric.c_str(), d.a, d.b, d.delta);
    }
    std::printf("energy gain of b over a: %+.2f%%\n", 100.0 * c.gain);
    return 0;
}

int cmd_oracle(const fs::path& cfg_path, const std::string& scenario, double freeze,
               std::optional<double> step) {
    const Config cfg = Config::load(cfg_path);
    const auto sc = harness::load_scenario(cfg, scenario);
    const auto duties = harness::duty_grid(sc.params.power.d_min, sc.params.power.d_max,
                                           step.value_or(sc.oracle.grid_step));
    const auto res = harness::mpp_oracle(sc, freeze, duties);
    std::printf("d,p_mean_w\n");
    for (std::size_t i = 0; i < res.duties.size(); ++i) {
        std::printf("%.6g,%.9g\n", res.duties[i], res.powers[i]);
    }
    std::printf("# D_star = %.6g, P_star = %.9g W (freeze %.6g s, window %.6g s)\n", res.d_star,
                res.p_star, freeze, sc.oracle.window);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piezoelectric energy-harvesting chain simulator"};
    app.require_subcommand(1);

    fs::path cfg_path;
    std::string scenario;
    fs::path out;
    std::optional<std::uint64_t> seed;
    fs::path dir_a;
    fs::path dir_b;
    double freeze = 0.0;
    std::optional<double> grid_step;

    auto* run = app.add_subcommand("run", "run one scenario and write timeseries.csv and report.txt");
    run->add_option("--config", cfg_path, "config file")->required();
    run->add_option("--scenario", scenario, "scenario name")->required();
    run->add_option("--out", out, "output directory")->required();
    run->add_option("--seed", seed, "override drive.seed");

    auto* lut = app.add_subcommand("build-lut", "characterize the SCA settings and write a LUT CSV");
    lut->add_option("--config", cfg_path, "config file")->required();
    lut->add_option("--scenario", scenario, "scenario supplying the parameters (default: base keys)");
    lut->add_option("--out", out, "LUT CSV path")->required();

    auto* cmp = app.add_subcommand("compare", "compare two run directories");
    cmp->add_option("report_a", dir_a, "baseline run directory")->required();
    cmp->add_option("report_b", dir_b, "candidate run directory")->required();

    auto* orc = app.add_subcommand("oracle", "fixed-duty sweep from a frozen state");
    orc->add_option("--config", cfg_path, "config file")->required();
    orc->add_option("--freeze-at", freeze, "freeze time in seconds")->required();
    orc->add_option("--scenario", scenario, "scenario name (default: base keys)");
    orc->add_option("--grid-step", grid_step, "duty grid spacing (<= 0.005)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorCategory::Usage);
    }

    try {
        if (*run) return cmd_run(cfg_path, scenario, out, seed);
        if (*lut) return cmd_build_lut(cfg_path, scenario, out);
        if (*cmp) return cmd_compare(dir_a, dir_b);
        if (*orc) return cmd_oracle(cfg_path, scenario, freeze, grid_step);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.category()) << "]: " << e.what() << '\n';
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << '\n';
        return 1;
    }
    return static_cast<int>(ErrorCategory::Usage);
}
