#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spinsim/control.hpp"

namespace spinsim {

enum class Phase { A, B, C, Done };

const char* phase_name(Phase p);

/// Full dynamic state of servicer and target.
struct SystemState {
  Quaternion q_b;                        ///< base attitude, inertial
  Vec3 w_b = Vec3::Zero();               ///< base rate, base frame
  Quaternion q_s;                        ///< target attitude, inertial
  Vec3 w_s = Vec3::Zero();               ///< target rate, target frame
  JointVector theta = JointVector::Zero();
  JointVector theta_dot = JointVector::Zero();
  Vec3 h_r = Vec3::Zero();               ///< wheel axial momenta
  Phase phase = Phase::A;
  double t = 0.0;
};

/// Which equations of motion govern the state.
enum class Plant {
  LockedServicer,  ///< joints locked, target flies free
  FreeServicer,    ///< joints free, target flies free
  Compound,        ///< servicer and target rigidly joined
};

/// Model terms evaluated at one state, shared by plant and controller.
struct PlantTerms {
  RobotInertiaSet set;
  ReducedDynamics rd;
  std::optional<CompoundDynamics> cd;
};

struct ControlOutput {
  Vec3 tau_r = Vec3::Zero();
  JointVector tau_m = JointVector::Zero();
  Vec3 tau_e = Vec3::Zero();
  double sigma = 0.0;
};

using Controller = std::function<ControlOutput(const SystemState&, const PlantTerms&)>;

struct StateDerivative {
  Vec4 q_b_dot = Vec4::Zero();
  Vec3 w_b_dot = Vec3::Zero();
  Vec4 q_s_dot = Vec4::Zero();
  Vec3 w_s_dot = Vec3::Zero();
  JointVector theta_dot = JointVector::Zero();
  JointVector theta_ddot = JointVector::Zero();
  Vec3 h_r_dot = Vec3::Zero();
};

PlantTerms evaluate_plant(const SystemModel& model, Plant plant, const SystemState& s);

StateDerivative state_derivative(const SystemModel& model, Plant plant, const SystemState& s,
                                 const Controller& controller, ControlOutput* control = nullptr);

/// One classic RK4 step.  The controller is evaluated at every stage;
/// `control` receives the first-stage output.  Quaternions are renormalized
/// afterwards, locked joints keep theta_dot == 0 and the compound keeps the
/// target attitude and rate equal to the base.  Throws NumericalError on
/// non-finite derivatives.
SystemState rk4_step(const SystemModel& model, Plant plant, const SystemState& s, double dt,
                     const Controller& controller, ControlOutput* control = nullptr);

/// Zero wheel torque, zero joint torque.
ControlOutput zero_control(const SystemState&, const PlantTerms&);

// ---------------------------------------------------------------------------
// Derived relative quantities.

struct RelativeMotion {
  Quaternion q_rel;          ///< base relative to target
  Mat3 target_to_base;       ///< A^T: target coordinates into base coordinates
  Vec3 w_rel;                ///< w_b - A^T w_s
  Vec3 target_rate_in_base;  ///< A^T w_s
  Vec3 target_accel_in_base; ///< A^T phi(w_s)
};

RelativeMotion relative_motion(const SystemModel& model, const SystemState& s);

struct MomentumLedger {
  Vec3 h_target;    ///< inertial frame
  Vec3 h_servicer;  ///< base + arm, inertial frame
  Vec3 h_wheels;    ///< inertial frame
  Vec3 h_total;
};

MomentumLedger momentum_ledger(const SystemModel& model, const SystemState& s);

// ---------------------------------------------------------------------------
// Mission.

struct MissionEvents {
  static constexpr std::array<const char*, 5> kNames{"synch_starts", "capture_starts", "capture_completes",
                                                     "detumbling_starts", "detumbling_completes"};
  std::array<std::optional<double>, 5> t;

  bool ordered() const;
};

struct TelemetryRecord {
  double t = 0.0;
  Vec3 w_rel = Vec3::Zero();
  Quaternion q_rel;
  Vec3 r_rel = Vec3::Zero();      ///< grapple relative to end-effector, base frame
  Quaternion eta_rel;             ///< grapple attitude relative to end-effector
  Vec3 v_rel = Vec3::Zero();      ///< grapple velocity relative to end-effector
  Vec3 w_rel_ee = Vec3::Zero();   ///< grapple rate relative to end-effector
  Vec3 tau_r = Vec3::Zero();
  Vec3 tau_e = Vec3::Zero();
  double h_target = 0.0;
  double h_servicer = 0.0;
  double h_wheels = 0.0;
  double h_total = 0.0;
  double lyapunov = 0.0;
  double sigma = 0.0;
  Phase phase = Phase::A;
};

/// Per-step callback payload.
struct StepInfo {
  const SystemState& before;
  const SystemState& after;
  const ControlOutput& control;  ///< at `before`
  bool terminal_step = false;    ///< decay rate capped to land on the momentum threshold
};
using StepObserver = std::function<void(const StepInfo&)>;

struct RunOptions {
  std::optional<Phase> phase_only;
  StepObserver observer;
};

/// Per-step extremes gathered over the whole run (not only telemetry rows).
struct MissionStats {
  long steps = 0;
  double peak_tau_r = 0.0;
  double peak_tau_e = 0.0;           ///< rigidized phase only
  long constraint_violations = 0;    ///< detumbling steps exceeding a torque limit by > 1e-9
  double sigma_min = 0.0;            ///< over detumbling steps
  double sigma_max = 0.0;
  double capture_pose_error = 0.0;   ///< end-effector to grapple at t_2, m
  double capture_attitude_error = 0.0;
  double capture_velocity_error = 0.0;  ///< m/s
  double capture_rate_error = 0.0;      ///< rad/s
};

struct MissionResult {
  bool success = false;
  std::string failure;
  MissionEvents events;
  std::vector<TelemetryRecord> telemetry;
  SystemState final_state;
  JointVector theta_f = JointVector::Zero();
  double t_f = 0.0;            ///< capture trajectory duration
  MomentumLedger initial_momentum;
  MomentumLedger final_momentum;
  MissionStats stats;
};

/// Initial state for a full mission or a phase-isolated run.
SystemState initial_state(const SystemModel& model, Phase start, JointVector* theta_f = nullptr);

/// Execute A -> B -> C -> Done with fixed-step RK4.  Deterministic for a
/// given model.  Validation errors propagate; mission-level failures
/// (Phase A timeout, infeasible detumbling, IK failure) are reported in the
/// result.
MissionResult run_mission(const SystemModel& model, const RunOptions& options = {});

TelemetryRecord make_record(const SystemModel& model, const SystemState& s, const ControlOutput& control);

}  // namespace spinsim
