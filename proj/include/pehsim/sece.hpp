#pragma once

// Synchronous electric charge extraction: a full-bridge rectifier charges the
// intermediate capacitor between displacement extrema, and the LC pulse at
// each extremum is collapsed into an instantaneous energy transfer.

namespace pehsim::sece {

struct SeceParams {
    double l_sece = 2.7e-3;          // H
    double c_rect = 10e-9;           // F
    double eta = 0.85;               // transfer efficiency, (0, 1]
    double v_diode = 0.3;            // V per diode
    double arm_threshold_z = 1e-5;   // m
    bool enabled = true;
};

void validate(const SeceParams& p);

enum class DiodeMode { Blocking, ConductingPositive, ConductingNegative };

[[nodiscard]] DiodeMode rectifier_mode(double v_p, double v_rect, const SeceParams& p);

/// Bridge conduction threshold, V_rect + 2 V_diode.
[[nodiscard]] inline double conduction_threshold(double v_rect, const SeceParams& p) {
    return v_rect + 2.0 * p.v_diode;
}

/// Polarity of a mode: +1, -1, or 0 while blocking.
[[nodiscard]] inline int polarity(DiodeMode m) {
    switch (m) {
        case DiodeMode::ConductingPositive: return 1;
        case DiodeMode::ConductingNegative: return -1;
        case DiodeMode::Blocking: break;
    }
    return 0;
}

struct ElectricalNodes {
    double z = 0.0;          // m, needed for the arming check
    double v_p = 0.0;
    double v_rect = 0.0;
    double v_storage = 0.0;
    double c_piezo = 0.0;    // F, piezo capacitance drained through the bridge
};

struct Extraction {
    ElectricalNodes after;
    double energy_available = 0.0;  // J, 1/2 C_rect V_rect^2 + 1/2 c_piezo V_p^2
    double energy_delivered = 0.0;  // J, eta * energy_available
};

/// Collapses the LC half-cycle into an instantaneous transfer onto the storage
/// capacitor. Both the rectifier capacitor and the piezo capacitance (which
/// drains through the bridge) are emptied, so the available energy is
/// 1/2 C_rect V_rect^2 + 1/2 c_piezo V_p^2 and eta of it is delivered. Throws NotArmed when |z| < arm_threshold_z.
[[nodiscard]] Extraction extract_at_extremum(const ElectricalNodes& nodes, const SeceParams& p,
                                             double c_storage);

/// pi * sqrt(L_sece * C_rect).
[[nodiscard]] double lc_half_period(const SeceParams& p);

}  // namespace pehsim::sece
