#pragma once

// Switched capacitor array: a bank of fixed capacitors switched either in
// parallel with the piezo capacitance or as one series leg (selected
// capacitors paralleled, the leg in series with C_p). A frequency-indexed
// look-up table picks the effective capacitance at runtime.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pehsim::sca {

enum class Topology { Parallel, Series };

[[nodiscard]] std::string to_string(Topology t);

struct CapacitorBank {
    std::vector<double> values{2e-9, 4e-9, 8e-9, 16e-9, 32e-9};  // F
};

void validate(const CapacitorBank& bank);

struct ScaSetting {
    std::uint32_t switch_mask = 0;
    Topology topology = Topology::Parallel;
    double c_add = 0.0;        // F, sum of selected values
    double c_effective = 0.0;  // F

    [[nodiscard]] bool is_bypass() const noexcept { return switch_mask == 0; }
    [[nodiscard]] int closed_switches() const noexcept;
    [[nodiscard]] std::string label() const;  // "bypass", "parallel:0b00100", ...
};

[[nodiscard]] ScaSetting make_setting(std::uint32_t mask, Topology topology,
                                      const CapacitorBank& bank, double c_p);

/// The bypass setting followed by every non-empty mask in each topology,
/// deduplicated by C_effective within 0.1% (the earlier, simpler setting wins).
[[nodiscard]] std::vector<ScaSetting> enumerate_settings(const CapacitorBank& bank, double c_p);

struct LutEntry {
    double freq_hz = 0.0;
    double c_effective = 0.0;
};

class LutTable {
public:
    LutTable() = default;
    /// Entries must have strictly increasing frequencies; throws ConfigError otherwise.
    explicit LutTable(std::vector<LutEntry> entries);

    [[nodiscard]] const std::vector<LutEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] double f_min() const { return entries_.front().freq_hz; }
    [[nodiscard]] double f_max() const { return entries_.back().freq_hz; }

private:
    std::vector<LutEntry> entries_;
};

/// Piecewise-linear interpolation, clamped to the end values outside the table.
[[nodiscard]] double query_lut(const LutTable& table, double freq_hz);

/// Setting closest to c_target; ties go to fewer closed switches, then Parallel.
[[nodiscard]] const ScaSetting& snap_to_realizable(double c_target,
                                                   std::span<const ScaSetting> settings);

/// Runtime retune from a sensed frequency.
[[nodiscard]] const ScaSetting& retune(double f_sensed, const LutTable& table,
                                       std::span<const ScaSetting> settings);

/// CSV with header `freq_hz,c_effective_f`, full round-trip precision.
void write_lut(const LutTable& table, const std::filesystem::path& path);
[[nodiscard]] LutTable read_lut(const std::filesystem::path& path);

}  // namespace pehsim::sca
