#include "pehsim/excitation.hpp"

#include "pehsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace pehsim::excitation {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Box-Muller over mt19937_64 so the sequence does not depend on the standard
// library's distribution implementation.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(two_pi * u2);
        has_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace

void validate(const DriveProfile& p) {
    if (!(p.f0 >= 0.0) || !(p.noise_rms >= 0.0)) {
        throw ConfigError("drive: f0 and noise_rms must be >= 0");
    }
    if (!(p.noise_cutoff_hz > 0.0) || !(p.noise_lattice_hz > 2.0 * p.noise_cutoff_hz)) {
        throw ConfigError("drive: need noise_cutoff_hz > 0 and a lattice rate above twice the cutoff");
    }
    if (p.kind == DriveKind::ConstantFreq && !(p.f_const > 0.0)) {
        throw ConfigError("drive.f_const must be > 0");
    }
    if (p.kind == DriveKind::VariablePath &&
        !(p.f_span >= 0.0 && p.f_center - p.f_span > 0.0)) {
        throw ConfigError("drive: variable path needs f_span >= 0 and f_center - f_span > 0");
    }
}

double frequency_at(double t, const DriveProfile& p) {
    if (p.kind == DriveKind::ConstantFreq) {
        return p.f_const;
    }
    const double arg =
        two_pi * p.path_rate * t + p.path_warp_depth * std::sin(two_pi * p.path_warp_rate * t);
    return p.f_center + p.f_span * std::sin(arg);
}

NoiseLattice::NoiseLattice(const DriveProfile& p, double duration) {
    dt_ = 1.0 / p.noise_lattice_hz;
    const auto n = static_cast<std::size_t>(std::ceil(std::max(duration, 0.0) / dt_)) + 2;
    samples_.assign(n, 0.0);
    if (!p.noise_enabled || p.noise_rms == 0.0) {
        return;
    }
    const double a = std::exp(-two_pi * p.noise_cutoff_hz * dt_);
    // Impulse response of G / (1 - a q^-1)^2 is G (k+1) a^k; its energy is
    // G^2 (1 + a^2) / (1 - a^2)^3, so this G gives unit variance.
    const double gain = std::sqrt(std::pow(1.0 - a * a, 3) / (1.0 + a * a));
    GaussianSource gauss(p.seed);
    double s1 = 0.0;
    double s2 = 0.0;
    const auto burn_in = static_cast<std::size_t>(std::ceil(20.0 / (1.0 - a)));
    for (std::size_t i = 0; i < burn_in + n; ++i) {
        s1 = a * s1 + gain * gauss.next();
        s2 = a * s2 + s1;
        if (i >= burn_in) {
            samples_[i - burn_in] = p.noise_rms * s2;
        }
    }
}

double NoiseLattice::at(double t) const {
    if (samples_.empty() || t <= 0.0) {
        return samples_.empty() ? 0.0 : samples_.front();
    }
    const double x = t / dt_;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples_.size()) {
        return samples_.back();
    }
    const double w = x - static_cast<double>(i);
    return samples_[i] + w * (samples_[i + 1] - samples_[i]);
}

Drive::Drive(DriveProfile profile, double duration)
    : profile_(std::move(profile)), noise_(profile_, duration) {}

double Drive::force(double t, double phase) const {
    return profile_.f0 * std::sin(phase) + noise(t);
}

double Drive::noise(double t) const { return noise_.at(t); }

}  // namespace pehsim::excitation
