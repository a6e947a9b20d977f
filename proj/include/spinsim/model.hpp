#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "spinsim/spatial.hpp"

namespace spinsim {

inline constexpr int kNumJoints = 6;
using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using Mat3x6 = Eigen::Matrix<double, 3, kNumJoints>;

/// Mass properties of one rigid body.  `com` is expressed in the body's own
/// frame; `inertia` is taken about the CoM in that same frame.
struct BodyParams {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
  /// Skip the principal-moment triangle inequality (SPD is still required).
  bool allow_nonphysical_inertia = false;
};

/// Revolute joint placement relative to the parent body frame.  The child
/// frame is `origin` + `rotation` * Rot(axis, theta).
struct Joint {
  Vec3 origin = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 axis = Vec3::UnitZ();
};

struct Link {
  std::string name;
  BodyParams body;
  double length = 0.0;  ///< distance from this joint to the next along local x
  Joint joint;
};

struct ArmModel {
  std::array<Link, kNumJoints> links;
  double qd_max = 0.0;   ///< rad/s
  double qdd_max = 0.0;  ///< rad/s^2
};

/// Three reaction wheels; column j of `axes` is the spin axis of wheel j in
/// the base frame.  The base inertia already contains the rotors as if
/// locked; `inertia` is the axial rotor inertia that spins freely.
struct WheelSet {
  Mat3 axes = Mat3::Identity();
  double inertia = 0.05;
};

struct TargetModel {
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();
  Vec3 grasp_offset = Vec3::Zero();            ///< grapple fixture in the target frame
  Quaternion grasp_attitude = Quaternion();     ///< required end-effector attitude in the target frame

  /// Spin-asymmetry parameter 1 - I_zz / I_xx.
  double lambda() const { return 1.0 - inertia(2, 2) / inertia(0, 0); }
};

struct Limits {
  double qd_max = 0.0;
  double qdd_max = 0.0;
  double tau_r_max = 0.0;  ///< N·m, Euclidean norm bound on wheel torque
  double tau_e_max = 0.0;  ///< N·m, Euclidean norm bound on end-effector torque
};

struct Gains {
  double kp = 0.0;       ///< Phase A attitude, 1/s^2
  double kd = 0.0;       ///< Phase A rate, 1/s
  double joint_kp = 0.0; ///< Phase B joint loop, 1/s^2
  double joint_kd = 0.0; ///< Phase B joint loop, 1/s
  double kw = 0.0;       ///< Phase B attitude rate, 1/s
  double kq = 0.0;       ///< Phase B attitude, 1/s^2

  /// Critically damped gains for a closed-loop bandwidth `w` (rad/s).
  static Gains from_bandwidth(double w) {
    return {w * w, 2.0 * w, w * w, 2.0 * w, 2.0 * w, w * w};
  }
};

struct InitialConditions {
  Vec3 omega_s = Vec3::Zero();           ///< target rate in its own frame
  Quaternion q_rel = Quaternion();       ///< base attitude relative to the target
  Vec3 omega_b = Vec3::Zero();           ///< base rate in the base frame
  Vec3 h_r = Vec3::Zero();               ///< wheel momentum
  JointVector theta_i = JointVector::Zero();
  Vec3 rho = Vec3::Zero();               ///< target CoM relative to the servicer CoM
};

struct SimSettings {
  double dt = 1e-3;
  double t_end = 2000.0;
  int telemetry_decimation = 100;
  double omega_tol = 1e-4;
  double q_tol = 1e-3;
  double dwell = 5.0;
  double settle = 30.0;
  double eps_h = 1e-6;
  double phase_a_timeout = 1500.0;
  bool appendix_literal = false;
};

/// Everything the mission needs, validated and immutable once loaded.
struct SystemModel {
  BodyParams base;
  ArmModel arm;
  WheelSet wheels;
  TargetModel target;
  Limits limits;
  Gains gains;
  InitialConditions initial;
  SimSettings sim;

  double arm_mass() const;
  /// Base plus links; rotors are part of the base.
  double servicer_mass() const { return base.mass + arm_mass(); }
};

/// Reference servicer/target inertial data with the
/// canonical yaw-pitch-pitch-wrist arm.
SystemModel reference_model();

/// Check every invariant of a model; throws ValidationError naming the field.
void validate(const SystemModel& model);

/// Parse a JSON configuration file (see configs/reference.json).
SystemModel load_config(const std::filesystem::path& path);
/// Parse configuration text.
SystemModel parse_config(const std::string& text);

// ---------------------------------------------------------------------------
// Kinematics.  All quantities are expressed in the base frame; positions are
// measured from the base CoM unless noted.

struct ForwardKinematics {
  Vec3 r = Vec3::Zero();         ///< end-effector position
  Quaternion eta;                ///< end-effector attitude
  Mat3 ee_rotation = Mat3::Identity();
  std::array<Vec3, kNumJoints> link_com;
  std::array<Mat3, kNumJoints> link_rotation;
  std::array<Vec3, kNumJoints> joint_position;
  std::array<Vec3, kNumJoints> joint_axis;
};

ForwardKinematics forward_kinematics(const SystemModel& model, const JointVector& theta);

/// Base CoM relative to the servicer CoM: r_b = -(1/m_b) sum m_i r_ci.
Vec3 base_com_offset(const SystemModel& model, const JointVector& theta);
Vec3 base_com_offset(const SystemModel& model, const ForwardKinematics& fk);

/// d r_b / d theta.
Mat3x6 com_jacobian(const SystemModel& model, const JointVector& theta);

/// Linear and angular Jacobians of the end-effector relative to the base.
struct EndEffectorJacobian {
  Mat3x6 linear;
  Mat3x6 angular;
};
EndEffectorJacobian end_effector_jacobian(const SystemModel& model, const JointVector& theta);

struct IkOptions {
  double damping = 1e-3;
  int max_iterations = 500;
  double tolerance = 1e-10;
};

/// Solve r(theta_f) + r_b(theta_f) = rho + varrho together with
/// eta(theta_f) = eta_f, starting from `seed`.  Frames are assumed aligned.
/// Throws NoSolutionError when the residual stalls above 1e-8.
JointVector solve_final_joints(const SystemModel& model, const Vec3& rho, const Vec3& varrho,
                               const Quaternion& eta_f, const JointVector& seed,
                               const IkOptions& options = {});

/// Position and attitude residual of a grasp configuration.
struct GraspResidual {
  Vec3 position;
  Vec3 attitude;  ///< vector part of eta_f^* eta(theta), canonical
};
GraspResidual grasp_residual(const SystemModel& model, const JointVector& theta, const Vec3& rho,
                             const Vec3& varrho, const Quaternion& eta_f);

}  // namespace spinsim
