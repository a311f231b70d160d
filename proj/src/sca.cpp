#include "pehsim/sca.hpp"

#include "pehsim/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pehsim::sca {

std::string to_string(Topology t) {
    return t == Topology::Parallel ? "parallel" : "series";
}

void validate(const CapacitorBank& bank) {
    if (bank.values.empty() || bank.values.size() > 31) {
        throw ConfigError("sca.bank must hold between 1 and 31 capacitors");
    }
    for (double v : bank.values) {
        if (!(v > 0.0)) {
            throw ConfigError("sca.bank values must be > 0");
        }
    }
}

int ScaSetting::closed_switches() const noexcept { return std::popcount(switch_mask); }

std::string ScaSetting::label() const {
    if (is_bypass()) {
        return "bypass";
    }
    std::string bits;
    for (std::uint32_t m = switch_mask; m != 0; m >>= 1) {
        bits.insert(bits.begin(), (m & 1u) ? '1' : '0');
    }
    return to_string(topology) + ":0b" + bits;
}

ScaSetting make_setting(std::uint32_t mask, Topology topology, const CapacitorBank& bank,
                        double c_p) {
    ScaSetting s;
    s.switch_mask = mask;
    s.topology = topology;
    for (std::size_t i = 0; i < bank.values.size(); ++i) {
        if (mask & (1u << i)) {
            s.c_add += bank.values[i];
        }
    }
    if (mask == 0) {
        s.c_effective = c_p;
    } else if (topology == Topology::Parallel) {
        s.c_effective = c_p + s.c_add;
    } else {
        s.c_effective = c_p * s.c_add / (c_p + s.c_add);
    }
    return s;
}

std::vector<ScaSetting> enumerate_settings(const CapacitorBank& bank, double c_p) {
    validate(bank);
    const std::uint32_t n_masks = 1u << bank.values.size();
    std::vector<ScaSetting> candidates;
    candidates.push_back(make_setting(0, Topology::Parallel, bank, c_p));
    for (Topology topo : {Topology::Parallel, Topology::Series}) {
        for (std::uint32_t mask = 1; mask < n_masks; ++mask) {
            candidates.push_back(make_setting(mask, topo, bank, c_p));
        }
    }
    // Simpler settings first so deduplication keeps them.
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return a.closed_switches() < b.closed_switches();
    });
    std::vector<ScaSetting> out;
    for (const auto& c : candidates) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const ScaSetting& kept) {
            return std::abs(kept.c_effective - c.c_effective) <= 1e-3 * kept.c_effective;
        });
        if (!dup) {
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.c_effective < b.c_effective; });
    return out;
}

LutTable::LutTable(std::vector<LutEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!std::isfinite(entries_[i].freq_hz) || !(entries_[i].c_effective > 0.0)) {
            throw ConfigError("LUT entries need finite frequencies and positive capacitances");
        }
        if (i > 0 && !(entries_[i].freq_hz > entries_[i - 1].freq_hz)) {
            throw ConfigError("LUT frequencies must be strictly increasing");
        }
    }
}

double query_lut(const LutTable& table, double freq_hz) {
    const auto& e = table.entries();
    if (e.empty()) {
        throw ConfigError("query_lut on an empty table");
    }
    if (freq_hz <= e.front().freq_hz) {
        return e.front().c_effective;
    }
    if (freq_hz >= e.back().freq_hz) {
        return e.back().c_effective;
    }
    const auto hi = std::upper_bound(e.begin(), e.end(), freq_hz,
                                     [](double f, const LutEntry& x) { return f < x.freq_hz; });
    const auto lo = hi - 1;
    if (lo->freq_hz == freq_hz) {
        return lo->c_effective;
    }
    const double w = (freq_hz - lo->freq_hz) / (hi->freq_hz - lo->freq_hz);
    return lo->c_effective + w * (hi->c_effective - lo->c_effective);
}

const ScaSetting& snap_to_realizable(double c_target, std::span<const ScaSetting> settings) {
    if (settings.empty()) {
        throw ConfigError("snap_to_realizable: no settings");
    }
    const ScaSetting* best = &settings.front();
    double best_d = std::abs(best->c_effective - c_target);
    for (const auto& s : settings.subspan(1)) {
        const double d = std::abs(s.c_effective - c_target);
        bool better = d < best_d;
        if (d == best_d) {
            if (s.closed_switches() != best->closed_switches()) {
                better = s.closed_switches() < best->closed_switches();
            } else {
                better = s.topology == Topology::Parallel && best->topology == Topology::Series;
            }
        }
        if (better) {
            best = &s;
            best_d = d;
        }
    }
    return *best;
}

const ScaSetting& retune(double f_sensed, const LutTable& table,
                         std::span<const ScaSetting> settings) {
    return snap_to_realizable(query_lut(table, f_sensed), settings);
}

void write_lut(const LutTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write LUT file " + path.string());
    }
    out << "freq_hz,c_effective_f\n";
    char buf[64];
    for (const auto& e : table.entries()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", e.freq_hz, e.c_effective);
        out << buf;
    }
    if (!out) {
        throw IoError("write failed for LUT file " + path.string());
    }
}

LutTable read_lut(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open LUT file " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("freq_hz,c_effective_f", 0) != 0) {
        throw ConfigError("LUT file " + path.string() + ": expected header freq_hz,c_effective_f");
    }
    std::vector<LutEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("LUT file " + path.string() + ":" + std::to_string(line_no) +
                              ": expected two comma-separated values");
        }
        try {
            std::size_t used = 0;
            LutEntry e;
            e.freq_hz = std::stod(line.substr(0, comma), &used);
            e.c_effective = std::stod(line.substr(comma + 1), &used);
            entries.push_back(e);
        } catch (const std::exception&) {
            throw ConfigError("LUT file " + path.string() + ":" + std::to_string(line_no) +
                              ": malformed number");
        }
    }
    if (entries.empty()) {
        throw ConfigError("LUT file " + path.string() + " holds no entries");
    }
    return LutTable(std::move(entries));
}

}  // namespace pehsim::sca
