#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

#include "pehsim/errors.hpp"
#include "pehsim/mppt.hpp"

#include <cmath>
#include <vector>

using namespace pehsim;
using namespace pehsim::mppt;
using Catch::Approx;

namespace {

constexpr double kDmin = 0.01;
constexpr double kDmax = 0.95;

// Static concave source with its peak at d_star.
struct Quadratic {
    double d_star = 0.4;
    double p_peak = 0.2;
    double curvature = 1.0;
    double operator()(double d) const {
        return std::max(0.0, p_peak - curvature * (d - d_star) * (d - d_star));
    }
};

Measurement meas(double p, double vs = 40.0) { return Measurement{vs, 0.0, p}; }

// Drives the controller against the source for n ticks; returns the duty history.
std::vector<double> track(const Quadratic& src, const MpptConfig& cfg, MpptState& s, int n,
                          double t0 = 0.0) {
    std::vector<double> duties;
    for (int k = 0; k < n; ++k) {
        const double t = t0 + k * cfg.control_period;
        s = controller_tick(meas(src(s.duty)), s, cfg, t, kDmin, kDmax);
        duties.push_back(s.duty);
    }
    return duties;
}

}  // namespace

TEST_CASE("hill-climb keeps direction while power rises", "[mppt]") {
    MpptConfig cfg;
    auto s = initial_state(cfg, kDmin, kDmax);
    s.last_power = 0.10;
    s.peak_power = 0.10;
    const auto a = controller_tick(meas(0.11), s, cfg, 0.0, kDmin, kDmax);
    const auto b = controller_tick(meas(0.12), a, cfg, 0.01, kDmin, kDmax);
    CHECK(a.direction == s.direction);
    CHECK(b.direction == s.direction);
    CHECK(a.duty > s.duty);
    CHECK(b.duty > a.duty);
}

TEST_CASE("falling power flips direction", "[mppt]") {
    MpptConfig cfg;
    auto s = initial_state(cfg, kDmin, kDmax);
    s.last_power = 0.10;
    s.peak_power = 0.10;
    const auto a = controller_tick(meas(0.095), s, cfg, 0.0, kDmin, kDmax);
    CHECK_FALSE(a.jumped);
    CHECK(a.direction == -s.direction);
    CHECK(a.duty < s.duty);
    CHECK(a.v_mpp_target == Approx(0.75 * 40.0));
}

TEST_CASE("FOCV jump after a load step fires once", "[mppt]") {
    MpptConfig cfg;
    auto s = initial_state(cfg, kDmin, kDmax);
    s.duty = 0.3;
    int jumps = 0;
    double t_jump = -1.0;
    for (int k = 0; k < 300; ++k) {
        const double t = k * cfg.control_period;
        // plateau, then a 40% collapse at t = 1 s that stays down
        const double p = t < 1.0 ? 0.2 + 1e-4 * std::sin(0.7 * k) : 0.12 + 1e-4 * std::sin(0.7 * k);
        s = controller_tick(meas(p), s, cfg, t, kDmin, kDmax);
        if (s.jumped) {
            ++jumps;
            t_jump = t;
            CHECK(s.duty == Approx(cfg.k_focv));
            CHECK(s.last_step == cfg.step_init);
            CHECK(s.peak_power == Approx(p));
        }
    }
    CHECK(jumps == 1);
    CHECK(t_jump == Approx(1.0));
}

TEST_CASE("holdoff limits jump frequency", "[mppt][property]") {
    fixtures::Gen g(3);
    MpptConfig cfg;
    auto s = initial_state(cfg, kDmin, kDmax);
    std::vector<double> jump_times;
    for (int k = 0; k < 5000; ++k) {
        const double t = k * cfg.control_period;
        s = controller_tick(meas(g.uniform(0.0, 1.0)), s, cfg, t, kDmin, kDmax);
        if (s.jumped) jump_times.push_back(t);
    }
    REQUIRE(jump_times.size() > 2);
    for (std::size_t i = 1; i < jump_times.size(); ++i) {
        CHECK(jump_times[i] - jump_times[i - 1] >= cfg.focv_holdoff - 1e-12);
    }
}

TEST_CASE("adaptive step mapping", "[mppt]") {
    MpptConfig cfg;
    CHECK(adaptive_step_target(0.0, cfg) == cfg.step_min);
    CHECK(adaptive_step_target(cfg.step_saturation, cfg) == Approx(cfg.step_max));
    CHECK(adaptive_step_target(10.0, cfg) == Approx(cfg.step_max));
    CHECK(adaptive_step_target(-1.0, cfg) == cfg.step_min);
}

TEST_CASE("duty and step stay clamped under fuzzed measurements", "[mppt][property]") {
    fixtures::Gen g(99);
    for (int trial = 0; trial < 20; ++trial) {
        MpptConfig cfg;
        cfg.k_focv = g.uniform(0.05, 0.99);
        cfg.step_gain = g.uniform(0.0, 1.0);
        cfg.focv_holdoff = g.uniform(0.0, 0.3);
        auto s = initial_state(cfg, kDmin, kDmax);
        for (int k = 0; k < 500; ++k) {
            const double p = g.integer(0, 9) == 0 ? 0.0 : g.uniform(0.0, 2.0) * std::pow(10.0, g.integer(-6, 0));
            s = controller_tick(Measurement{g.uniform(0.0, 80.0), g.uniform(0.0, 60.0), p}, s, cfg,
                                k * cfg.control_period, kDmin, kDmax);
            REQUIRE(s.duty >= kDmin);
            REQUIRE(s.duty <= kDmax);
            REQUIRE(s.last_step >= cfg.step_min);
            REQUIRE(s.last_step <= cfg.step_max);
            REQUIRE(std::abs(s.direction) == 1);
        }
    }
}

TEST_CASE("P&O converges on a static concave source", "[mppt][property]") {
    MpptConfig cfg;
    for (double d_star : {0.2, 0.4, 0.65, 0.85}) {
        Quadratic src{d_star};
        auto s = initial_state(cfg, kDmin, kDmax);
        const auto duties = track(src, cfg, s, 200);
        CHECK(std::abs(duties[49] - d_star) <= cfg.step_max);
        // bounded oscillation afterwards
        for (std::size_t k = 50; k < duties.size(); ++k) {
            CHECK(std::abs(duties[k] - d_star) <= cfg.step_max);
        }
        for (std::size_t k = 51; k < duties.size(); ++k) {
            CHECK(std::abs(duties[k] - duties[k - 1]) <= 2.0 * cfg.step_max);
        }
    }
}

TEST_CASE("converged duty does not depend on k_focv", "[mppt][property]") {
    Quadratic src{0.45};
    std::vector<double> finals;
    for (double k : {0.6, 0.75, 0.9}) {
        MpptConfig cfg;
        cfg.k_focv = k;
        auto s = initial_state(cfg, kDmin, kDmax);
        s.peak_power = 1.0;  // forces a coarse jump on the first tick
        const auto duties = track(src, cfg, s, 150);
        double mean = 0.0;
        for (std::size_t i = 100; i < duties.size(); ++i) mean += duties[i];
        finals.push_back(mean / 50.0);
    }
    for (double f : finals) {
        CHECK(std::abs(f - finals.front()) <= MpptConfig{}.step_max);
        CHECK(std::abs(f - 0.45) <= MpptConfig{}.step_max);
    }
}

TEST_CASE("efficiency ratio", "[mppt]") {
    CHECK(mppt_efficiency(0.19, 0.2) == Approx(0.95));
    CHECK(mppt_efficiency(0.2, 0.2) == Approx(1.0));
    CHECK_THROWS_AS(mppt_efficiency(0.1, 0.0), SimulationError);
}

TEST_CASE("mppt config validation", "[mppt]") {
    MpptConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    auto bad = cfg;
    bad.k_focv = 1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.step_init = 0.1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.power_drop_ratio = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.control_period = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}
