#pragma once

// Drive force: a sinusoid at constant or slowly varying frequency plus
// seeded, band-limited noise sampled on a fixed lattice.

#include <cstdint>
#include <vector>

namespace pehsim::excitation {

enum class DriveKind { ConstantFreq, VariablePath };

struct DriveProfile {
    DriveKind kind = DriveKind::ConstantFreq;
    double f0 = 0.5;            // N, amplitude
    double f_const = 100.0;     // Hz
    double f_center = 100.0;    // Hz
    double f_span = 10.0;       // Hz
    double path_rate = 0.3;     // Hz, primary modulation
    double path_warp_rate = 0.11;  // Hz
    double path_warp_depth = 0.7;  // rad
    bool noise_enabled = false;
    double noise_rms = 0.025;   // N
    double noise_cutoff_hz = 20.0;
    double noise_lattice_hz = 1000.0;
    std::uint64_t seed = 1;
};

void validate(const DriveProfile& p);

[[nodiscard]] double frequency_at(double t, const DriveProfile& p);

/// Band-limited Gaussian noise: white samples through two cascaded one-pole
/// low-pass sections at the cutoff, normalized to unit variance and scaled to
/// noise_rms. Linear interpolation between lattice points.
class NoiseLattice {
public:
    NoiseLattice() = default;
    NoiseLattice(const DriveProfile& p, double duration);

    [[nodiscard]] double at(double t) const;
    [[nodiscard]] const std::vector<double>& samples() const noexcept { return samples_; }
    [[nodiscard]] double spacing() const noexcept { return dt_; }

private:
    double dt_ = 1e-3;
    std::vector<double> samples_;
};

/// Owns a profile and its precomputed noise.
class Drive {
public:
    Drive() = default;
    Drive(DriveProfile profile, double duration);

    [[nodiscard]] const DriveProfile& profile() const noexcept { return profile_; }
    [[nodiscard]] double frequency(double t) const { return frequency_at(t, profile_); }
    /// F0 sin(phase) + noise(t); phase is the integrated 2*pi*f(t).
    [[nodiscard]] double force(double t, double phase) const;
    [[nodiscard]] double noise(double t) const;
    [[nodiscard]] const NoiseLattice& lattice() const noexcept { return noise_; }

private:
    DriveProfile profile_;
    NoiseLattice noise_;
};

}  // namespace pehsim::excitation
