#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

#include "pehsim/errors.hpp"
#include "pehsim/integrator.hpp"
#include "pehsim/transducer.hpp"

#include <cmath>
#include <vector>

using namespace pehsim;
using namespace pehsim::transducer;
using Catch::Approx;

namespace {

BoucWenParams unit_bw() {
    BoucWenParams bw;
    bw.z_ref = 1.0;
    return bw;
}

}  // namespace

TEST_CASE("spring force decomposition", "[transducer]") {
    MechanicalParams mech;
    BoucWenParams bw;
    bw.alpha = 1.0;
    CHECK(spring_force(1e-3, 0.0, mech, bw) == Approx(4.0).epsilon(1e-15));
    CHECK(spring_force(0.0, 0.0, mech, bw) == 0.0);
    bw.alpha = 0.8;
    CHECK(spring_force(1e-3, 5e-4, mech, bw) == Approx(3.6).epsilon(1e-14));
    CHECK(hysteretic_force(5e-4, mech, bw) == Approx(0.4).epsilon(1e-14));
}

TEST_CASE("bouc-wen rate", "[transducer]") {
    const auto bw = unit_bw();
    CHECK(bouc_wen_rate(0.1, 0.0, bw) == Approx(0.1));
    CHECK(bouc_wen_rate(0.0, 0.37, bw) == 0.0);
    CHECK(bouc_wen_rate(0.1, 0.5, bw) == Approx(0.05).epsilon(1e-14));
    // with the default 1 mm reference the same point in normalized units
    BoucWenParams scaled;
    CHECK(bouc_wen_rate(0.1, 0.5e-3, scaled) == Approx(0.05).epsilon(1e-12));
}

TEST_CASE("bouc-wen rate is odd for odd n", "[transducer][property]") {
    fixtures::Gen g(11);
    for (double n : {1.0, 3.0}) {
        auto bw = unit_bw();
        bw.n = n;
        for (int i = 0; i < 500; ++i) {
            const double zd = g.uniform(-2.0, 2.0);
            const double h = g.uniform(-1.5, 1.5);
            CHECK(bouc_wen_rate(-zd, -h, bw) == Approx(-bouc_wen_rate(zd, h, bw)).margin(1e-15));
        }
    }
}

TEST_CASE("bouc-wen bound holds along driven trajectories", "[transducer][property]") {
    fixtures::Gen g(7);
    for (int trial = 0; trial < 40; ++trial) {
        BoucWenParams bw;
        bw.a = g.uniform(0.5, 2.0);
        bw.beta = g.uniform(0.1, 1.0);
        bw.gamma = g.uniform(-0.05, 0.9);
        if (bw.beta + bw.gamma <= 0.05) bw.gamma = 0.1;
        bw.n = g.integer(1, 3);
        bw.z_ref = 1e-3;
        const double bound = hysteresis_bound(bw);
        // prescribed velocity: two incommensurate tones, large enough to saturate h
        const double a1 = g.uniform(0.1, 2.0), a2 = g.uniform(0.0, 1.0);
        const double w1 = g.uniform(200.0, 800.0), w2 = g.uniform(50.0, 300.0);
        auto rhs = [&](double t, const integrator::Vec<1>& y, integrator::Vec<1>& dy) {
            const double zd = a1 * std::sin(w1 * t) + a2 * std::cos(w2 * t);
            dy[0] = bouc_wen_rate(zd, y[0], bw);
        };
        integrator::SolverConfig cfg;
        cfg.max_step = 1e-4;
        integrator::Vec<1> y{0.0};
        integrator::Vec<1> f{};
        rhs(0.0, y, f);
        double t = 0.0, h = cfg.initial_step, worst = 0.0;
        while (t < 0.2) {
            const auto acc = integrator::advance(t, y, f, h, 0.2, rhs, cfg);
            t = acc.step.t1;
            y = acc.step.y1;
            f = acc.step.f1;
            h = acc.h_next;
            worst = std::max(worst, std::abs(y[0]));
        }
        // the raw integration may overshoot by the local error; the simulator
        // projects back onto the bound (checked below)
        CHECK(worst <= bound * (1.0 + 10.0 * cfg.rel_tol));
    }
}

TEST_CASE("mech derivatives", "[transducer]") {
    MechanicalParams mech;  // theta = 1e-3, m = 0.01
    BoucWenParams bw;
    ElectricalParams el;
    const auto rest = mech_derivatives(MechState{}, 0.0, mech, bw, el);
    CHECK(rest.dz == 0.0);
    CHECK(rest.dz_dot == 0.0);
    CHECK(rest.dh == 0.0);
    CHECK(rest.dv_p_open == 0.0);

    const auto back = mech_derivatives(MechState{0.0, 0.0, 0.0, 10.0}, 0.0, mech, bw, el);
    CHECK(back.dz_dot == Approx(-1.0).epsilon(1e-14));

    const auto open = mech_derivatives(MechState{0.0, 0.1, 0.0, 0.0}, 0.0, mech, bw, el);
    CHECK(open.dv_p_open == Approx(1e-3 * 0.1 / 15e-9).epsilon(1e-14));
    CHECK(open.dv_p_open == Approx(6.67e3).epsilon(1e-3));
    CHECK(open.dz == 0.1);
}

TEST_CASE("parameter validation", "[transducer][errors]") {
    MechanicalParams mech;
    mech.mass = 0.0;
    CHECK_THROWS_AS(validate(mech), ConfigError);
    mech = MechanicalParams{};
    mech.theta = -1.0;
    CHECK_THROWS_AS(validate(mech), ConfigError);
    BoucWenParams bw;
    bw.alpha = 1.2;
    CHECK_THROWS_AS(validate(bw), ConfigError);
    CHECK_THROWS_AS(validate(ElectricalParams{15e-9, 0.0}), ConfigError);
    CHECK(natural_frequency_hz(MechanicalParams{}) == Approx(100.658).epsilon(1e-5));
}

TEST_CASE("loop area on synthetic cycles", "[transducer]") {
    // ellipse z = A sin, F = B sin(. + phi): area pi A B sin(phi), sign by orientation
    const double a = 1e-3, b = 0.5, phi = 0.3;
    std::vector<LoopPoint> pts;
    const int n = 4000;
    for (int i = 0; i <= 3 * n; ++i) {
        const double th = 2.0 * std::numbers::pi * i / n - 0.1;
        pts.push_back({a * std::sin(th), b * std::sin(th + phi)});
    }
    CHECK(hysteresis_loop_area(pts) == Approx(std::numbers::pi * a * b * std::sin(phi)).epsilon(1e-5));

    std::vector<LoopPoint> line;
    for (const auto& p : pts) line.push_back({p.z, 4000.0 * p.z});
    CHECK(std::abs(hysteresis_loop_area(line)) <= 1e-12);

    std::vector<LoopPoint> still(100, LoopPoint{0.0, 0.0});
    CHECK(hysteresis_loop_area(still) == 0.0);

    std::vector<LoopPoint> partial(pts.begin(), pts.begin() + n / 2);
    CHECK_THROWS_AS(hysteresis_loop_area(partial), InsufficientCycle);
}

TEST_CASE("linear limit matches the closed-form amplitude", "[transducer][property]") {
    const auto p = fixtures::mechanical_only(1.0);
    for (double f : {95.0, 100.66, 106.0}) {
        auto o = fixtures::constant_drive(f, 1.2);
        o.record_samples = false;
        Simulator sim(p, o);
        const auto r = sim.run();
        const double amp = fixtures::extremum_amplitude(r, 1.0);
        const double expect = fixtures::linear_amplitude(p.mech.mass, p.mech.damping,
                                                         p.mech.stiffness, o.drive.f0, f);
        INFO("f = " << f);
        CHECK(amp == Approx(expect).epsilon(5e-3));
    }
}

TEST_CASE("hysteresis loop area equals the dissipated hysteretic energy", "[transducer]") {
    const auto p = fixtures::mechanical_only(0.8);
    auto o = fixtures::constant_drive(100.0, 0.6);
    o.sample_rate = 50e3;
    Simulator sim(p, o);
    const auto r = sim.run();
    const double kh = (1.0 - p.bouc_wen.alpha) * p.mech.stiffness;
    std::vector<LoopPoint> loop;
    std::vector<PowerPoint> power;
    for (const auto& s : r.samples) {
        loop.push_back({s.z, kh * s.h});
        power.push_back({s.t, s.z, kh * s.h * s.z_dot});
    }
    const double area = hysteresis_loop_area(loop);
    CHECK(area > 0.0);
    CHECK(area == Approx(cycle_energy(power)).epsilon(1e-2));
}

TEST_CASE("hysteretic dissipation is non-negative per cycle", "[transducer][property]") {
    fixtures::Gen g(3);
    for (int trial = 0; trial < 6; ++trial) {
        const auto p = fixtures::mechanical_only(g.uniform(0.5, 0.95));
        auto o = fixtures::constant_drive(g.uniform(90.0, 110.0), 0.4, g.uniform(0.1, 1.0));
        o.sample_rate = 40e3;
        Simulator sim(p, o);
        const auto r = sim.run();
        const double kh = (1.0 - p.bouc_wen.alpha) * p.mech.stiffness;
        std::vector<PowerPoint> power;
        for (const auto& s : r.samples) power.push_back({s.t, s.z, kh * s.h * s.z_dot});
        CHECK(cycle_energy(power) > 0.0);
        CHECK(r.max_abs_h <= hysteresis_bound(p.bouc_wen) * (1.0 + 1e-6));
    }
}
