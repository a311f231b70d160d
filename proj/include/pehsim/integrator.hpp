#pragma once

// Embedded Dormand-Prince 5(4) stepper with the 4th-order continuous
// extension, plus bisection-based event location on the dense output.
// Header-only: the stepper is templated on the state dimension so the
// harvester model and the closed-form checks share one implementation.

#include "pehsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>

namespace pehsim::integrator {

struct SolverConfig {
    double rel_tol = 1e-5;
    double abs_tol = 1e-8;
    double max_step = 1.0 / (50.0 * 110.0);  // s
    double event_tol = 1e-9;                 // s
    double vel_tol = 1e-6;                   // m/s
    double min_step = 1e-15;                 // s, underflow threshold
    double initial_step = 1e-6;              // s
};

inline void validate(const SolverConfig& cfg) {
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || !(cfg.event_tol > 0.0) ||
        !(cfg.max_step > 0.0) || !(cfg.vel_tol > 0.0) || !(cfg.initial_step > 0.0)) {
        throw ConfigError("solver: rel_tol, abs_tol, event_tol, max_step, vel_tol, initial_step must be > 0");
    }
}

template <std::size_t N>
using Vec = std::array<double, N>;

namespace dopri {
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dopri

/// One accepted (or trial) step together with its continuous extension.
template <std::size_t N>
struct DenseStep {
    double t0 = 0.0;
    double t1 = 0.0;
    Vec<N> y0{};
    Vec<N> y1{};
    Vec<N> f1{};  // f(t1, y1), reused as the next step's first stage
    double error = 0.0;  // scaled error norm, <= 1 for an accepted step
    std::array<Vec<N>, 5> rcont{};

    [[nodiscard]] Vec<N> at(double t) const {
        if (t <= t0) {
            return y0;
        }
        if (t >= t1) {
            return y1;
        }
        const double s = (t - t0) / (t1 - t0);
        const double s1 = 1.0 - s;
        Vec<N> y{};
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = rcont[0][i] +
                   s * (rcont[1][i] + s1 * (rcont[2][i] + s * (rcont[3][i] + s1 * rcont[4][i])));
        }
        return y;
    }
};

/// Single Dormand-Prince step of fixed size h from (t, y) with f0 = f(t, y).
/// The scaled error norm is the componentwise maximum of |err_i| / sc_i with
/// sc_i = abs_tol + rel_tol * max(|y0_i|, |y1_i|).
template <std::size_t N, typename Rhs>
DenseStep<N> trial_step(double t, const Vec<N>& y, const Vec<N>& f0, double h, Rhs& rhs,
                        const SolverConfig& cfg) {
    using namespace dopri;
    Vec<N> k2, k3, k4, k5, k6, tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * f0[i];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * f0[i] + a32 * k2[i]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a41 * f0[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * f0[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * f0[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t1 = t + h;
    rhs(t1, tmp, k6);

    DenseStep<N> out;
    out.t0 = t;
    out.t1 = t1;
    out.y0 = y;
    for (std::size_t i = 0; i < N; ++i)
        out.y1[i] = y[i] + h * (a71 * f0[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs(t1, out.y1, out.f1);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double e = h * (e1 * f0[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * out.f1[i]);
        const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(out.y1[i]));
        err = std::max(err, std::abs(e) / sc);
    }
    out.error = err;

    for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = out.y1[i] - y[i];
        const double bspl = h * f0[i] - ydiff;
        out.rcont[0][i] = y[i];
        out.rcont[1][i] = ydiff;
        out.rcont[2][i] = bspl;
        out.rcont[3][i] = ydiff - h * out.f1[i] - bspl;
        out.rcont[4][i] = h * (d1 * f0[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                               d7 * out.f1[i]);
    }
    return out;
}

template <std::size_t N>
struct AcceptedStep {
    DenseStep<N> step;
    double h_next = 0.0;
};

/// Advances from (t, y) by one accepted step, no further than t_limit and no
/// longer than cfg.max_step. h is the proposed size; rejected trials shrink it
/// with the standard controller (factor clamped to [0.2, 5]).
template <std::size_t N, typename Rhs>
AcceptedStep<N> advance(double t, const Vec<N>& y, const Vec<N>& f0, double h, double t_limit,
                        Rhs& rhs, const SolverConfig& cfg) {
    constexpr double safety = 0.9;
    constexpr double fac_min = 0.2;
    constexpr double fac_max = 5.0;
    h = std::min(h, cfg.max_step);
    for (;;) {
        bool clipped = false;
        if (t + h >= t_limit) {
            h = t_limit - t;
            clipped = true;
        }
        if (h < cfg.min_step) {
            std::ostringstream msg;
            msg << "step size underflow at t=" << t << " (h=" << h << ")";
            throw StepSizeUnderflow(msg.str());
        }
        DenseStep<N> s = trial_step(t, y, f0, h, rhs, cfg);
        if (clipped) {
            s.t1 = t_limit;  // land exactly on the limit despite rounding in t + h
        }
        const double fac =
            s.error == 0.0 ? fac_max
                           : std::clamp(safety * std::pow(s.error, -0.2), fac_min, fac_max);
        if (s.error <= 1.0) {
            return {s, std::min(h * fac, cfg.max_step)};
        }
        h *= std::max(fac, fac_min);
    }
}

/// Integrates y' = f(t, y) from t0 to t1 with no events. Convenience for
/// closed-form checks.
template <std::size_t N, typename Rhs>
Vec<N> integrate(double t0, double t1, Vec<N> y, Rhs& rhs, const SolverConfig& cfg,
                 std::size_t* steps_taken = nullptr) {
    validate(cfg);
    Vec<N> f{};
    rhs(t0, y, f);
    double t = t0;
    double h = cfg.initial_step;
    std::size_t steps = 0;
    while (t < t1) {
        const auto acc = advance(t, y, f, h, t1, rhs, cfg);
        t = acc.step.t1;
        y = acc.step.y1;
        f = acc.step.f1;
        h = acc.h_next;
        ++steps;
    }
    if (steps_taken != nullptr) {
        *steps_taken = steps;
    }
    return y;
}

template <std::size_t N>
struct EventRoot {
    double t = 0.0;
    Vec<N> y{};
};

/// True when g crosses from one sign to the other (or onto zero) across [g0, g1].
inline bool sign_change(double g0, double g1) {
    return (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
}

/// Locates the root of g(t, y) inside an accepted step by bisection on the
/// dense output until the bracket is narrower than event_tol. The returned
/// time is the bracket's right end, where the sign has already changed.
template <std::size_t N, typename G>
EventRoot<N> locate_event(const DenseStep<N>& step, G g, double event_tol) {
    double lo = step.t0;
    double hi = step.t1;
    const double g_lo0 = g(lo, step.y0);
    const double g_hi0 = g(hi, step.y1);
    if (!sign_change(g_lo0, g_hi0)) {
        std::ostringstream msg;
        msg << "locate_event: no sign change on [" << lo << ", " << hi << "] (g0=" << g_lo0
            << ", g1=" << g_hi0 << ")";
        throw NoSignChange(msg.str());
    }
    double g_lo = g_lo0;
    while (hi - lo > event_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double g_mid = g(mid, step.at(mid));
        if (sign_change(g_lo, g_mid)) {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    return {hi, step.at(hi)};
}

}  // namespace pehsim::integrator
