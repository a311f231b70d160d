#include "pehsim/transducer.hpp"

#include "pehsim/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace pehsim::transducer {

void validate(const MechanicalParams& mech) {
    if (!(mech.mass > 0.0) || !(mech.stiffness > 0.0) || !(mech.damping >= 0.0) ||
        !(mech.theta >= 0.0)) {
        throw ConfigError("transducer: require mass > 0, stiffness > 0, damping >= 0, theta >= 0");
    }
}

void validate(const BoucWenParams& bw) {
    if (!(bw.alpha >= 0.0 && bw.alpha <= 1.0)) {
        throw ConfigError("bouc_wen.alpha must lie in [0, 1]");
    }
    if (!(bw.n >= 1.0)) {
        throw ConfigError("bouc_wen.n must be >= 1");
    }
    if (!(bw.z_ref > 0.0)) {
        throw ConfigError("bouc_wen.z_ref must be > 0");
    }
    const double s = bw.beta + bw.gamma;
    if (s != 0.0 && !(bw.a / s > 0.0)) {
        throw ConfigError("bouc_wen: A/(beta+gamma) must be positive for a bounded loop");
    }
}

void validate(const ElectricalParams& el) {
    if (!(el.c_p > 0.0) || !(el.c_effective > 0.0)) {
        throw ConfigError("electrical: c_p and c_effective must be > 0");
    }
}

double natural_frequency_hz(const MechanicalParams& mech) {
    return std::sqrt(mech.stiffness / mech.mass) / (2.0 * std::numbers::pi);
}

double hysteresis_bound(const BoucWenParams& bw) {
    const double s = bw.beta + bw.gamma;
    if (s <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return bw.z_ref * std::pow(bw.a / s, 1.0 / bw.n);
}

double spring_force(double z, double h, const MechanicalParams& mech, const BoucWenParams& bw) {
    return bw.alpha * mech.stiffness * z + (1.0 - bw.alpha) * mech.stiffness * h;
}

double hysteretic_force(double h, const MechanicalParams& mech, const BoucWenParams& bw) {
    return (1.0 - bw.alpha) * mech.stiffness * h;
}

double bouc_wen_rate(double z_dot, double h, const BoucWenParams& bw) {
    const double u = h / bw.z_ref;
    const double abs_u = std::abs(u);
    // |u|^(n-1) * u without a pow call in the common n == 1 case
    const double pow_nm1_u = (bw.n == 1.0) ? u : std::pow(abs_u, bw.n - 1.0) * u;
    const double pow_n = (bw.n == 1.0) ? abs_u : std::pow(abs_u, bw.n);
    return bw.a * z_dot - bw.beta * std::abs(z_dot) * pow_nm1_u - bw.gamma * z_dot * pow_n;
}

MechDerivatives mech_derivatives(const MechState& s, double f_drive, const MechanicalParams& mech,
                                 const BoucWenParams& bw, const ElectricalParams& el) {
    MechDerivatives d;
    d.dz = s.z_dot;
    d.dz_dot = (f_drive - mech.damping * s.z_dot - spring_force(s.z, s.h, mech, bw) -
                mech.theta * s.v_p) /
               mech.mass;
    d.dh = bouc_wen_rate(s.z_dot, s.h, bw);
    d.dv_p_open = mech.theta * s.z_dot / el.c_effective;
    return d;
}

namespace {

struct Crossing {
    std::size_t index;  // crossing lies in [index, index + 1]
    double frac;        // position inside the interval
};

// Last two upward zero crossings of z (z[i] < 0 <= z[i+1]).
template <typename Point>
std::optional<std::pair<Crossing, Crossing>> last_cycle(std::span<const Point> pts) {
    std::vector<Crossing> ups;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double z0 = pts[i].z;
        const double z1 = pts[i + 1].z;
        if (z0 < 0.0 && z1 >= 0.0) {
            ups.push_back({i, -z0 / (z1 - z0)});
        }
    }
    if (ups.size() < 2) {
        return std::nullopt;
    }
    return std::make_pair(ups[ups.size() - 2], ups.back());
}

template <typename Point>
bool zero_amplitude(std::span<const Point> pts) {
    for (const auto& p : pts) {
        if (p.z != 0.0) {
            return false;
        }
    }
    return true;
}

// Integrates y dx over the cycle with trapezoids; endpoints are linearly
// interpolated at the crossings.
template <typename Point, typename X, typename Y>
double integrate_cycle(std::span<const Point> pts, const Crossing& a, const Crossing& b, X x_of,
                       Y y_of) {
    auto lerp = [&](const Crossing& c, auto f) {
        const double v0 = f(pts[c.index]);
        const double v1 = f(pts[c.index + 1]);
        return v0 + c.frac * (v1 - v0);
    };
    double x_prev = lerp(a, x_of);
    double y_prev = lerp(a, y_of);
    double sum = 0.0;
    for (std::size_t i = a.index + 1; i <= b.index; ++i) {
        const double x = x_of(pts[i]);
        const double y = y_of(pts[i]);
        sum += 0.5 * (y + y_prev) * (x - x_prev);
        x_prev = x;
        y_prev = y;
    }
    const double x_end = lerp(b, x_of);
    const double y_end = lerp(b, y_of);
    sum += 0.5 * (y_end + y_prev) * (x_end - x_prev);
    return sum;
}

}  // namespace

double hysteresis_loop_area(std::span<const LoopPoint> trajectory) {
    if (zero_amplitude(trajectory)) {
        return 0.0;
    }
    const auto cycle = last_cycle(trajectory);
    if (!cycle) {
        throw InsufficientCycle("hysteresis_loop_area: trajectory holds less than one full cycle");
    }
    // Contour integral of F dz.
    return integrate_cycle(
        trajectory, cycle->first, cycle->second, [](const LoopPoint& p) { return p.z; },
        [](const LoopPoint& p) { return p.force; });
}

double cycle_energy(std::span<const PowerPoint> trajectory) {
    if (zero_amplitude(trajectory)) {
        return 0.0;
    }
    const auto cycle = last_cycle(trajectory);
    if (!cycle) {
        throw InsufficientCycle("cycle_energy: trajectory holds less than one full cycle");
    }
    return integrate_cycle(
        trajectory, cycle->first, cycle->second, [](const PowerPoint& p) { return p.t; },
        [](const PowerPoint& p) { return p.power; });
}

}  // namespace pehsim::transducer
