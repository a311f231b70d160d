#include "pehsim/sece.hpp"

#include "pehsim/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pehsim::sece {

void validate(const SeceParams& p) {
    if (!(p.l_sece > 0.0) || !(p.c_rect > 0.0) || !(p.eta > 0.0 && p.eta <= 1.0) ||
        !(p.v_diode >= 0.0) || !(p.arm_threshold_z >= 0.0)) {
        throw ConfigError("sece: require l_sece > 0, c_rect > 0, 0 < eta <= 1, v_diode >= 0, arm_threshold_z >= 0");
    }
}

DiodeMode rectifier_mode(double v_p, double v_rect, const SeceParams& p) {
    const double threshold = conduction_threshold(v_rect, p);
    if (v_p >= threshold) {
        return DiodeMode::ConductingPositive;
    }
    if (v_p <= -threshold) {
        return DiodeMode::ConductingNegative;
    }
    return DiodeMode::Blocking;
}

Extraction extract_at_extremum(const ElectricalNodes& nodes, const SeceParams& p,
                               double c_storage) {
    if (std::abs(nodes.z) < p.arm_threshold_z) {
        std::ostringstream msg;
        msg << "SECE not armed: |z|=" << std::abs(nodes.z) << " < " << p.arm_threshold_z;
        throw NotArmed(msg.str());
    }
    Extraction out;
    out.energy_available = 0.5 * p.c_rect * nodes.v_rect * nodes.v_rect + 0.5 * nodes.c_piezo * nodes.v_p * nodes.v_p;
    out.energy_delivered = p.eta * out.energy_available;
    out.after = nodes;
    out.after.v_storage = std::sqrt(nodes.v_storage * nodes.v_storage +
                                    2.0 * out.energy_delivered / c_storage);
    out.after.v_rect = 0.0;
    out.after.v_p = 0.0;
    return out;
}

double lc_half_period(const SeceParams& p) {
    return std::numbers::pi * std::sqrt(p.l_sece * p.c_rect);
}

}  // namespace pehsim::sece
