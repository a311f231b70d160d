#include "pehsim/mppt.hpp"

#include "pehsim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pehsim::mppt {

void validate(const MpptConfig& cfg) {
    if (!(cfg.k_focv > 0.0 && cfg.k_focv < 1.0)) {
        throw ConfigError("mppt.k_focv must lie in (0, 1)");
    }
    if (!(cfg.step_min > 0.0 && cfg.step_min <= cfg.step_init && cfg.step_init <= cfg.step_max)) {
        throw ConfigError("mppt: require 0 < step_min <= step_init <= step_max");
    }
    if (!(cfg.power_drop_ratio > 0.0 && cfg.power_drop_ratio < 1.0)) {
        throw ConfigError("mppt.power_drop_ratio must lie in (0, 1)");
    }
    if (!(cfg.control_period > 0.0) || !(cfg.focv_holdoff >= 0.0) ||
        !(cfg.step_gain >= 0.0 && cfg.step_gain <= 1.0) || !(cfg.step_saturation > 0.0)) {
        throw ConfigError("mppt: control_period > 0, focv_holdoff >= 0, step_gain in [0,1], step_saturation > 0");
    }
}

MpptState initial_state(const MpptConfig& cfg, double d_min, double d_max) {
    MpptState s;
    s.duty = std::clamp(cfg.d_init, d_min, d_max);
    s.last_step = cfg.step_init;
    return s;
}

double adaptive_step_target(double normalized_dp, const MpptConfig& cfg) {
    const double x = std::min(1.0, std::max(0.0, normalized_dp) / cfg.step_saturation);
    return cfg.step_min + (cfg.step_max - cfg.step_min) * x;
}

MpptState controller_tick(const Measurement& meas, const MpptState& state, const MpptConfig& cfg,
                          double t, double d_min, double d_max) {
    constexpr double eps = 1e-12;
    MpptState next = state;
    next.jumped = false;
    next.v_mpp_target = cfg.k_focv * meas.v_storage;
    const double p = meas.p_load;

    const bool dropped = p < (1.0 - cfg.power_drop_ratio) * state.peak_power;
    const bool holdoff_ok = t - state.t_last_jump >= cfg.focv_holdoff;
    if (dropped && holdoff_ok) {
        next.duty = std::clamp(cfg.k_focv, d_min, d_max);
        next.last_step = cfg.step_init;
        next.t_last_jump = t;
        next.peak_power = p;
        next.jumped = true;
    } else {
        if (!(p > state.last_power)) {
            next.direction = -state.direction;
        }
        const double normalized = std::abs(p - state.last_power) / std::max(p, eps);
        next.last_step = std::clamp(cfg.step_gain * state.last_step +
                                        (1.0 - cfg.step_gain) * adaptive_step_target(normalized, cfg),
                                    cfg.step_min, cfg.step_max);
        next.duty = std::clamp(state.duty + next.direction * next.last_step, d_min, d_max);
    }
    next.last_power = p;
    next.peak_power = std::max(next.peak_power, p);
    return next;
}

double mppt_efficiency(double mean_power, double oracle_power) {
    if (!(oracle_power > 0.0)) {
        throw SimulationError("mppt_efficiency: oracle power must be > 0");
    }
    return mean_power / oracle_power;
}

}  // namespace pehsim::mppt
