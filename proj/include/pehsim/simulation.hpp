#pragma once

// Event-driven simulation of the full harvesting chain. Continuous dynamics
// are integrated piecewise between located events (displacement extrema,
// rectifier turn-on) and scheduled ones (controller ticks, LUT retunes, the
// load step, noise lattice knots); each event applies an instantaneous reset.

#include "pehsim/excitation.hpp"
#include "pehsim/integrator.hpp"
#include "pehsim/mppt.hpp"
#include "pehsim/powertrain.hpp"
#include "pehsim/sca.hpp"
#include "pehsim/sece.hpp"
#include "pehsim/transducer.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pehsim {

struct HarvesterParams {
    transducer::MechanicalParams mech;
    transducer::BoucWenParams bouc_wen;
    double c_p = 15e-9;
    sece::SeceParams sece;
    powertrain::PowerParams power;
    mppt::MpptConfig mppt;
    sca::CapacitorBank bank;
    integrator::SolverConfig solver;
};

void validate(const HarvesterParams& p);

enum class ScaMode { FixedBypass, AdaptiveLut };

[[nodiscard]] std::string to_string(ScaMode m);

struct SimState {
    double t = 0.0;
    double z = 0.0;
    double z_dot = 0.0;
    double h = 0.0;
    double v_p = 0.0;
    double v_rect = 0.0;
    double v_storage = 0.0;
    double i_l = 0.0;
    double v_out = 0.0;
    sece::DiodeMode diode = sece::DiodeMode::Blocking;
    bool sece_armed = false;
};

enum class EventKind : std::uint8_t {
    DisplacementExtremum,
    DiodeOn,
    DiodeOff,
    ControllerTick,
    LoadStep,
    LutRetune,
};

inline constexpr std::size_t kEventKindCount = 6;

[[nodiscard]] std::string to_string(EventKind k);

struct EventRecord {
    double t_event = 0.0;
    EventKind kind = EventKind::DisplacementExtremum;
    SimState state_before;
    SimState state_after;
    bool extraction = false;  // DisplacementExtremum that fired SECE
};

/// Bits of the event_flags CSV column.
namespace flags {
inline constexpr std::uint32_t extremum = 1u << 0;
inline constexpr std::uint32_t extraction = 1u << 1;
inline constexpr std::uint32_t diode_on = 1u << 2;
inline constexpr std::uint32_t diode_off = 1u << 3;
inline constexpr std::uint32_t controller_tick = 1u << 4;
inline constexpr std::uint32_t load_step = 1u << 5;
inline constexpr std::uint32_t lut_retune = 1u << 6;
inline constexpr std::uint32_t focv_jump = 1u << 7;
}  // namespace flags

struct Sample {
    double t = 0.0;
    double z = 0.0;
    double z_dot = 0.0;
    double h = 0.0;
    double v_p = 0.0;
    double v_rect = 0.0;
    double v_storage = 0.0;
    double i_l = 0.0;
    double v_out = 0.0;
    double p_load = 0.0;
    double duty = 0.0;
    double f_drive = 0.0;
    double c_effective = 0.0;
    std::uint32_t event_flags = 0;
};

struct TickRecord {
    double t = 0.0;
    double duty = 0.0;        // after the tick
    double p_load = 0.0;      // measured
    double v_storage = 0.0;
    bool focv_jump = false;
};

/// Running integrals carried with the state.
struct EnergyLedger {
    double work_in = 0.0;        // int F_drive z_dot dt
    double viscous = 0.0;        // int c z_dot^2 dt
    double hysteretic = 0.0;     // int (1 - alpha) k h z_dot dt
    double electrical = 0.0;     // int theta V_p z_dot dt
    double load = 0.0;           // int V_out^2 / R dt
    double buck_input = 0.0;     // int D i_L V_storage dt
    double sece_delivered = 0.0; // sum of extraction deposits
    double sece_available = 0.0; // sum of 1/2 C_rect V_rect^2 at extraction
};

/// Everything needed to resume a run bit-for-bit from a given instant.
struct Checkpoint {
    SimState state;
    double phase = 0.0;
    EnergyLedger ledger;
    mppt::MpptState controller;
    sca::ScaSetting setting;
    double r_load = 0.0;
    int motion_dir = 0;
    std::uint64_t next_tick = 1;
    std::uint64_t next_retune = 0;
    bool load_step_done = false;
    std::uint64_t extraction_count = 0;
};

struct RunOptions {
    excitation::DriveProfile drive;
    double duration = 5.0;
    ScaMode sca_mode = ScaMode::FixedBypass;
    std::shared_ptr<const sca::LutTable> lut;
    double retune_period = 50e-3;
    double sample_rate = 10e3;
    bool record_samples = true;
    bool record_events = true;
    std::optional<double> fixed_duty;         // freezes the controller
    std::optional<double> fixed_c_effective;  // pins the capacitance (LUT cells)
    std::vector<double> snapshot_times;       // Checkpoints captured at these instants
};

struct RunResult {
    std::vector<Sample> samples;
    std::vector<EventRecord> events;
    std::vector<TickRecord> ticks;
    std::vector<Checkpoint> snapshots;  // aligned with RunOptions::snapshot_times
    Checkpoint final;
    std::array<std::uint64_t, kEventKindCount> event_counts{};
    std::uint64_t focv_jumps = 0;
    std::uint64_t retune_changes = 0;
    std::uint64_t accepted_steps = 0;
    double max_abs_h = 0.0;
    double max_abs_extremum_velocity = 0.0;
};

/// Mechanical energy identity: work_in - (dKE + dPE_elastic + hysteretic +
/// viscous + electrical), using the ledgers and states at two instants.
[[nodiscard]] double energy_residual(const HarvesterParams& p, const Checkpoint& from,
                                     const Checkpoint& to);

class Simulator {
public:
    Simulator(HarvesterParams params, RunOptions options);

    /// Starts from rest at t = 0.
    [[nodiscard]] RunResult run();
    /// Resumes from a checkpoint and runs until options.duration.
    [[nodiscard]] RunResult run_from(const Checkpoint& start);

    [[nodiscard]] Checkpoint initial_checkpoint() const;
    [[nodiscard]] const excitation::Drive& drive() const noexcept { return drive_; }
    [[nodiscard]] const std::vector<sca::ScaSetting>& settings() const noexcept { return settings_; }

private:
    HarvesterParams params_;
    RunOptions options_;
    excitation::Drive drive_;
    std::vector<sca::ScaSetting> settings_;
};

}  // namespace pehsim
