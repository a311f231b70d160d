#pragma once

// Shared setups and independent reference formulas for the tests.

#include "pehsim/simulation.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fixtures {

/// Purely mechanical oscillator: no coupling, no extraction, no converter.
inline pehsim::HarvesterParams mechanical_only(double alpha = 1.0) {
    pehsim::HarvesterParams p;
    p.mech.theta = 0.0;
    p.bouc_wen.alpha = alpha;
    p.sece.enabled = false;
    p.power.buck_enabled = false;
    p.mppt.enabled = false;
    return p;
}

inline pehsim::RunOptions constant_drive(double f_hz, double duration, double f0 = 0.5) {
    pehsim::RunOptions o;
    o.drive.kind = pehsim::excitation::DriveKind::ConstantFreq;
    o.drive.f_const = f_hz;
    o.drive.f0 = f0;
    o.duration = duration;
    return o;
}

/// Steady-state amplitude of m z'' + c z' + k z = F0 sin(w t).
inline double linear_amplitude(double m, double c, double k, double f0, double f_hz) {
    const double w = 2.0 * std::numbers::pi * f_hz;
    return f0 / std::hypot(k - m * w * w, c * w);
}

/// Largest |z| among displacement extrema recorded after t_from.
inline double extremum_amplitude(const pehsim::RunResult& r, double t_from) {
    double amp = 0.0;
    for (const auto& e : r.events) {
        if (e.kind == pehsim::EventKind::DisplacementExtremum && e.t_event >= t_from) {
            amp = std::max(amp, std::abs(e.state_before.z));
        }
    }
    return amp;
}

/// Deterministic generator for the hand-rolled property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
};

}  // namespace fixtures
