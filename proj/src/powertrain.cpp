#include "pehsim/powertrain.hpp"

#include "pehsim/errors.hpp"

namespace pehsim::powertrain {

void validate(const PowerParams& p) {
    if (!(p.c_storage > 0.0) || !(p.r_load > 0.0) || !(p.r_load_after_step > 0.0) ||
        !(p.l_buck > 0.0) || !(p.c_out > 0.0)) {
        throw ConfigError("power: capacitances, inductance and load resistances must be > 0");
    }
    if (!(p.d_min >= 0.0 && p.d_min < p.d_max && p.d_max <= 1.0)) {
        throw ConfigError("power: require 0 <= d_min < d_max <= 1");
    }
}

BuckDerivatives buck_derivatives(double v_storage, double i_l, double v_out, double duty,
                                 double r_load, const PowerParams& p) {
    BuckDerivatives d;
    const double drive = duty * v_storage - v_out;
    d.di_l = (i_l <= 0.0 && drive < 0.0) ? 0.0 : drive / p.l_buck;
    const double i_in = duty * (i_l > 0.0 ? i_l : 0.0);
    d.dv_storage = -i_in / p.c_storage;
    d.dv_out = ((i_l > 0.0 ? i_l : 0.0) - v_out / r_load) / p.c_out;
    return d;
}

double load_resistance(double t, const PowerParams& p) {
    if (has_load_step(p) && t >= p.t_load_step) {
        return p.r_load_after_step;
    }
    return p.r_load;
}

double net_energy(std::span<const PowerSample> samples) {
    double e = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        e += 0.5 * (samples[i].power + samples[i - 1].power) * (samples[i].t - samples[i - 1].t);
    }
    return e;
}

}  // namespace pehsim::powertrain
