#pragma once

// Hybrid tracker: a pseudo-FOCV coarse jump keyed to the storage voltage,
// followed by perturb-and-observe with an adaptive step.

#include <limits>

namespace pehsim::mppt {

struct MpptConfig {
    double k_focv = 0.75;
    double control_period = 10e-3;   // s
    double step_init = 0.01;
    double step_min = 0.001;
    double step_max = 0.05;
    double step_gain = 0.5;          // weight on the previous step
    double step_saturation = 0.1;    // normalized |dP|/P that maps to step_max
    double power_drop_ratio = 0.2;
    double focv_holdoff = 100e-3;    // s
    double d_init = 0.5;
    bool enabled = true;             // false freezes D at d_init
};

void validate(const MpptConfig& cfg);

struct MpptState {
    double duty = 0.5;
    int direction = 1;
    double last_power = 0.0;
    double peak_power = 0.0;
    double last_step = 0.01;
    double t_last_jump = -std::numeric_limits<double>::infinity();
    double v_mpp_target = 0.0;   // k_focv * V_storage from the latest tick
    bool jumped = false;         // latest tick applied a FOCV jump
};

[[nodiscard]] MpptState initial_state(const MpptConfig& cfg, double d_min, double d_max);

struct Measurement {
    double v_storage = 0.0;
    double v_out = 0.0;
    double p_load = 0.0;
};

/// Maps normalized |dP| / max(P, eps) onto [step_min, step_max].
[[nodiscard]] double adaptive_step_target(double normalized_dp, const MpptConfig& cfg);

[[nodiscard]] MpptState controller_tick(const Measurement& meas, const MpptState& state,
                                        const MpptConfig& cfg, double t, double d_min,
                                        double d_max);

/// Mean delivered power over the evaluation window divided by oracle power.
[[nodiscard]] double mppt_efficiency(double mean_power, double oracle_power);

}  // namespace pehsim::mppt
