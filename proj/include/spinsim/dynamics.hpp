#pragma once

#include "spinsim/model.hpp"

namespace spinsim {

inline constexpr int kFloatingDofs = 6 + kNumJoints;
inline constexpr int kReducedDofs = 3 + kNumJoints;

using FloatingVector = Eigen::Matrix<double, kFloatingDofs, 1>;
using FloatingMatrix = Eigen::Matrix<double, kFloatingDofs, kFloatingDofs>;
using ReducedVector = Eigen::Matrix<double, kReducedDofs, 1>;
using ReducedMatrix = Eigen::Matrix<double, kReducedDofs, kReducedDofs>;
using Mat6x3 = Eigen::Matrix<double, 6, 3>;

// ---------------------------------------------------------------------------
// Floating-base rigid-body algorithms on the servicer (base + arm, rotors
// locked into the base).  Generalized velocity ordering is
// [w_b; v_b; theta_dot], all base quantities in base coordinates, v_b being
// the velocity of the base CoM.

/// Composite-rigid-body inertia matrix of the floating base chain.
FloatingMatrix crba(const SystemModel& model, const JointVector& theta);

/// Recursive Newton-Euler inverse dynamics; returns generalized forces
/// [n_b; f_b; tau_m] for the given velocity and acceleration.
FloatingVector rnea(const SystemModel& model, const JointVector& theta, const FloatingVector& nu,
                    const FloatingVector& nu_dot);

/// Base linear velocity that makes the total linear momentum vanish.
Vec3 zero_momentum_base_velocity(const FloatingMatrix& m, const Vec3& w_b, const JointVector& theta_dot);

/// Blocks of the servicer dynamics with the base translation eliminated
/// (servicer CoM inertially fixed) and the wheels kept as separate DOFs.
struct RobotInertiaSet {
  Mat3 M_b_tilde;     ///< base rows, rotors locked
  Mat3x6 M_bm;
  Mat3 M_br;
  Eigen::Matrix<double, kNumJoints, kNumJoints> M_m;
  Mat3 M_r;
  Vec3 c_b_tilde;
  JointVector c_m;
  Vec3 c_r;
  Mat6x3 J_b;         ///< end-effector twist [v; w] per base rate
  Eigen::Matrix<double, 6, kNumJoints> J_m;
  Vec3 r_b;           ///< base CoM relative to servicer CoM
  Vec3 ee_position;   ///< end-effector relative to servicer CoM

  /// Full block matrix including wheels (base, joints, wheels).
  Eigen::Matrix<double, 12, 12> full_inertia() const;
};

RobotInertiaSet assemble(const SystemModel& model, const JointVector& theta, const Vec3& w_b,
                         const JointVector& theta_dot, const Vec3& h_r = Vec3::Zero());

struct ReducedDynamics {
  Mat3 M_b;
  Vec3 c_b;
  Mat3 B;

  Mat3 B_inverse() const;
};

/// Eliminate the wheel accelerations: B = -M_br M_r^-1, M_b = M~_b + B M_br^T,
/// c_b = c~_b + B c_r.  Throws ConfigurationError if M_r is singular.
ReducedDynamics reduce(const RobotInertiaSet& set);

/// Generalized inertia M(theta) of the wheel-reduced system.
ReducedMatrix generalized_inertia(const RobotInertiaSet& set, const ReducedDynamics& rd);

/// Torque-free Euler rate of the axisymmetric target:
/// lambda [w_y w_z, -w_x w_z, 0].
Vec3 target_euler_rate(const TargetModel& target, const Vec3& w_s);

struct ServicerState {
  Vec3 w_b = Vec3::Zero();
  JointVector theta = JointVector::Zero();
  JointVector theta_dot = JointVector::Zero();
  Vec3 h_r = Vec3::Zero();
};

struct Accelerations {
  Vec3 w_b_dot = Vec3::Zero();
  JointVector theta_ddot = JointVector::Zero();
};

enum class JointMode { Free, Locked };

/// Solve the wheel-reduced equations of motion for the accelerations.  With
/// locked joints only the 3x3 base block is solved and theta_ddot is zero.
Accelerations forward_dynamics(const SystemModel& model, const ServicerState& state, const Vec3& tau_r,
                               const JointVector& tau_m, const Vec6& n_e = Vec6::Zero(),
                               JointMode mode = JointMode::Free);

struct ServicerMomentum {
  Vec3 body;    ///< base + arm, about the servicer CoM, base frame
  Vec3 wheels;  ///< wheel rotors, base frame
  Vec3 total() const { return body + wheels; }
};

ServicerMomentum servicer_momentum(const RobotInertiaSet& set, const ReducedDynamics& rd,
                                   const ServicerState& state);

// ---------------------------------------------------------------------------
// Rigidized servicer + target after capture.

struct CompoundDynamics {
  Mat3 M_t;     ///< equivalent inertia about the compound CoM, wheels free
  Vec3 c_t;
  Mat3 M_s;
  Vec3 c_s;
  Mat3 G;       ///< wheel torque to end-effector torque
  Vec3 c_g;
  Mat3 B;
  Vec3 rho_s;   ///< target CoM relative to the compound CoM
  Vec3 target_offset;  ///< target CoM relative to the servicer CoM
  double target_mass = 0.0;
};

/// Compound dynamics with the arm locked at `theta_locked`, target frame
/// aligned with the base frame and the grapple fixture at the end-effector.
/// The grasp wrench is eliminated through the pseudo-inverse of the map
/// from grapple wrench to target-CoM wrench.
CompoundDynamics compound(const SystemModel& model, const JointVector& theta_locked, const Vec3& w_b,
                          const Vec3& h_r = Vec3::Zero());

/// Angular acceleration of the compound body for wheel torque tau_r.
Vec3 compound_acceleration(const CompoundDynamics& cd, const Vec3& tau_r);

/// f_e = -m_s (w_dot x rho_s + w x (w x rho_s)).
Vec3 end_effector_force(double target_mass, const Vec3& rho_s, const Vec3& w_b, const Vec3& w_b_dot);

/// tau_e = G tau_r + c_g.
Vec3 torque_transmission(const CompoundDynamics& cd, const Vec3& tau_r);

}  // namespace spinsim
