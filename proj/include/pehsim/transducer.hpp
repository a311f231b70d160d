#pragma once

// Nonlinear electromechanical transducer: a single-mode oscillator whose
// restoring force carries a Bouc-Wen hysteretic branch, coupled to the piezo
// capacitance through a force-per-volt factor.

#include <span>

namespace pehsim::transducer {

struct MechanicalParams {
    double mass = 0.01;          // kg
    double damping = 0.5;        // N*s/m
    double stiffness = 4000.0;   // N/m
    double theta = 1e-3;         // coupling, N/V (== A*s/m)
};

/// Bouc-Wen shape. The internal variable h carries displacement units; beta
/// and gamma act on the normalized amplitude h / z_ref, so with z_ref = 1 the
/// textbook form is recovered.
struct BoucWenParams {
    double alpha = 0.85;   // elastic share of the restoring force, [0, 1]
    double a = 1.0;
    double beta = 0.5;
    double gamma = 0.5;
    double n = 1.0;
    double z_ref = 1e-3;   // m
};

struct ElectricalParams {
    double c_p = 15e-9;          // F
    double c_effective = 15e-9;  // F, after SCA action
};

struct MechState {
    double z = 0.0;
    double z_dot = 0.0;
    double h = 0.0;
    double v_p = 0.0;
};

struct MechDerivatives {
    double dz = 0.0;
    double dz_dot = 0.0;
    double dh = 0.0;
    double dv_p_open = 0.0;
};

void validate(const MechanicalParams& mech);
void validate(const BoucWenParams& bw);
void validate(const ElectricalParams& el);

[[nodiscard]] double natural_frequency_hz(const MechanicalParams& mech);

/// Ultimate bound on |h| for a bounded Bouc-Wen loop, z_ref*(A/(beta+gamma))^(1/n).
/// Returns +inf when beta + gamma <= 0.
[[nodiscard]] double hysteresis_bound(const BoucWenParams& bw);

[[nodiscard]] double spring_force(double z, double h, const MechanicalParams& mech,
                                  const BoucWenParams& bw);

/// Hysteretic part of the restoring force, (1 - alpha) k h.
[[nodiscard]] double hysteretic_force(double h, const MechanicalParams& mech,
                                      const BoucWenParams& bw);

[[nodiscard]] double bouc_wen_rate(double z_dot, double h, const BoucWenParams& bw);

[[nodiscard]] MechDerivatives mech_derivatives(const MechState& state, double f_drive,
                                               const MechanicalParams& mech,
                                               const BoucWenParams& bw,
                                               const ElectricalParams& el);

struct LoopPoint {
    double z = 0.0;
    double force = 0.0;
};

struct PowerPoint {
    double t = 0.0;
    double z = 0.0;
    double power = 0.0;
};

/// Signed area of the force-displacement loop over the last full cycle, where
/// a cycle runs between consecutive upward zero crossings of z. Positive for
/// clockwise traversal in the (z, F) plane, i.e. net dissipation.
/// Throws InsufficientCycle when no full cycle is present; a trajectory that
/// never leaves z = 0 yields 0.
[[nodiscard]] double hysteresis_loop_area(std::span<const LoopPoint> trajectory);

/// Time integral of power over the same last full cycle (trapezoid in t).
[[nodiscard]] double cycle_energy(std::span<const PowerPoint> trajectory);

}  // namespace pehsim::transducer
