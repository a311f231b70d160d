#pragma once

// Experiment orchestration: scenarios from config, runs with CSV/report
// output, report comparison, the fixed-duty power oracle and LUT building.

#include "pehsim/config.hpp"
#include "pehsim/simulation.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pehsim::harness {

struct LutBuildOptions {
    double f_min = 90.0;
    double f_max = 110.0;
    double grid_step = 1.0;   // Hz
    double settle = 0.2;      // s, discarded before measuring
    double window = 0.5;      // s, measurement window
};

struct OracleOptions {
    double window = 0.5;      // s, fixed-duty evaluation window
    double grid_step = 0.005;
    std::optional<double> freeze_at;  // when set, runs report mppt_efficiency
};

struct Scenario {
    std::string name;
    HarvesterParams params;
    RunOptions options;
    std::filesystem::path lut_path;
    bool build_lut_if_missing = true;
    LutBuildOptions lut_build;
    OracleOptions oracle;
    std::vector<std::pair<std::string, std::string>> echo;  // resolved key/value pairs
};

/// Names declared through `scenario.<name>.*` keys, sorted.
[[nodiscard]] std::vector<std::string> scenario_names(const Config& cfg);

/// Resolves a scenario: `scenario.<name>.<key>` overrides `<key>`. An empty
/// name uses the base keys only. Unknown keys are a ConfigError.
[[nodiscard]] Scenario load_scenario(const Config& cfg, const std::string& name,
                                     std::optional<std::uint64_t> seed = std::nullopt);

/// Reads the LUT for AdaptiveLut scenarios, building and writing it first when
/// the file is missing and building is allowed.
void attach_lut(Scenario& sc);

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string sca_mode;
    double duration = 0.0;
    double net_energy_j = 0.0;
    double mean_power_w = 0.0;
    std::optional<double> mppt_efficiency;
    double oracle_power_w = 0.0;
    double oracle_duty = 0.0;
    std::uint64_t extraction_count = 0;
    double hysteresis_loop_area_j = 0.0;  // per cycle, last full cycle
    std::array<std::uint64_t, kEventKindCount> event_counts{};
    std::uint64_t focv_jumps = 0;
    std::uint64_t retune_changes = 0;
    double work_in_j = 0.0;
    double energy_residual_j = 0.0;
    double sece_delivered_j = 0.0;
    double sece_available_j = 0.0;
    double final_v_storage = 0.0;
    double final_duty = 0.0;
    std::vector<std::pair<std::string, std::string>> config_echo;
};

struct ScenarioRun {
    RunReport report;
    RunResult result;
};

/// Runs a loaded scenario. Writes timeseries.csv and report.txt when out_dir is given.
[[nodiscard]] ScenarioRun run_scenario(const Scenario& sc,
                                       const std::optional<std::filesystem::path>& out_dir);
/// Loads the config, attaches the LUT and runs.
[[nodiscard]] RunReport run_scenario(const std::filesystem::path& cfg_path,
                                     const std::string& name,
                                     const std::filesystem::path& out_dir,
                                     std::optional<std::uint64_t> seed = std::nullopt);

[[nodiscard]] RunReport make_report(const Scenario& sc, const RunResult& result);

inline constexpr const char* kCsvHeader =
    "t,z,z_dot,h,V_p,V_rect,V_storage,i_L,V_out,P_load,D,f_drive,C_effective,event_flags";

void write_timeseries(const std::vector<Sample>& samples, const std::filesystem::path& path);
[[nodiscard]] std::vector<Sample> read_timeseries(const std::filesystem::path& path);
void write_report(const RunReport& report, const std::filesystem::path& path);
/// Raw key/value view of a report.txt.
[[nodiscard]] Config read_report(const std::filesystem::path& path);

struct MetricDelta {
    std::string metric;
    double a = 0.0;
    double b = 0.0;
    double delta = 0.0;
};

struct Comparison {
    std::string scenario_a;
    std::string scenario_b;
    double energy_a = 0.0;
    double energy_b = 0.0;
    double gain = 0.0;  // (E_b - E_a) / E_a
    std::vector<MetricDelta> deltas;
};

/// Throws MismatchedScenarios when seeds or durations differ.
[[nodiscard]] Comparison compare(const Config& report_a, const Config& report_b);
[[nodiscard]] Comparison compare(const std::filesystem::path& dir_a,
                                 const std::filesystem::path& dir_b);

struct OracleResult {
    double t_freeze = 0.0;
    double d_star = 0.0;
    double p_star = 0.0;
    std::vector<double> duties;
    std::vector<double> powers;  // mean delivered power per duty
};

/// Duties d_min, d_min + step, ... and d_max.
[[nodiscard]] std::vector<double> duty_grid(double d_min, double d_max, double step);

/// Runs the scenario to t_freeze, then replays each grid duty with the
/// controller frozen for the evaluation window and takes the best mean power.
[[nodiscard]] OracleResult mpp_oracle(const Scenario& sc, double t_freeze,
                                      const std::vector<double>& duties);
/// Variant from an already captured checkpoint.
[[nodiscard]] OracleResult mpp_oracle_from(const Scenario& sc, const Checkpoint& frozen,
                                           const std::vector<double>& duties);

struct LutBuild {
    sca::LutTable table;
    std::vector<double> freqs;
    std::vector<sca::ScaSetting> settings;
    std::vector<std::vector<double>> power;  // [freq][setting], mean harvested power
    std::vector<std::size_t> winner;         // index into settings per freq
};

[[nodiscard]] std::vector<double> frequency_grid(const LutBuildOptions& opt);

/// Exhaustive characterization: for each frequency and setting, a
/// constant-frequency run with the converter disabled; the winner maximizes
/// the mean power delivered to storage. Throws DegenerateSweep when every
/// candidate yields zero at some frequency.
[[nodiscard]] LutBuild build_lut(const Scenario& base, const std::vector<double>& freqs,
                                 const std::vector<sca::ScaSetting>& settings,
                                 const LutBuildOptions& opt);

}  // namespace pehsim::harness
