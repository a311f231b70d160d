#pragma once

// Storage capacitor, averaged buck converter and resistive load with a
// scheduled step.

#include <span>

namespace pehsim::powertrain {

struct PowerParams {
    double c_storage = 100e-6;          // F
    double r_load = 50e3;               // Ohm, before the step
    double r_load_after_step = 10e3;    // Ohm
    double t_load_step = 1.0;           // s; a negative value disables the step
    double l_buck = 1e-3;               // H
    double c_out = 10e-6;               // F
    double d_min = 0.01;
    double d_max = 0.95;
    bool buck_enabled = true;
};

void validate(const PowerParams& p);

[[nodiscard]] inline bool has_load_step(const PowerParams& p) { return p.t_load_step >= 0.0; }

struct BuckDerivatives {
    double dv_storage = 0.0;  // converter draw only; SECE deposits are impulsive
    double di_l = 0.0;
    double dv_out = 0.0;
};

/// Averaged continuous-conduction buck with diode emulation: the inductor
/// current never goes negative.
[[nodiscard]] BuckDerivatives buck_derivatives(double v_storage, double i_l, double v_out,
                                               double duty, double r_load,
                                               const PowerParams& p);

[[nodiscard]] double load_resistance(double t, const PowerParams& p);

[[nodiscard]] inline double delivered_power(double v_out, double r) { return v_out * v_out / r; }

struct PowerSample {
    double t = 0.0;
    double power = 0.0;
};

/// Trapezoidal integral of delivered power over the samples.
[[nodiscard]] double net_energy(std::span<const PowerSample> samples);

}  // namespace pehsim::powertrain
