#pragma once

#include <optional>

#include "spinsim/dynamics.hpp"

namespace spinsim {

// ---------------------------------------------------------------------------
// Phase A: spin matching with locked joints.

struct GainsA {
  double kp = 0.0;
  double kd = 0.0;
};

/// Wheel torque driving the base onto the target's attitude and rate:
/// tau_r = B^-1 (c_b - M_b (k_p q_v + k_d w_rel - a_ff)), where a_ff is the
/// target-rate feedforward A^T phi(w_s) expressed in the base frame.  The
/// closed loop is w_rel_dot = w_rel x A^T w_s - k_p q_v - k_d w_rel.
Vec3 phase_a_torque(const Quaternion& q_rel, const Vec3& w_rel, const ReducedDynamics& rd, const GainsA& g,
                    const Vec3& target_accel_ff = Vec3::Zero());

/// k_p ||q - q*||^2 + 1/2 ||w_rel||^2, whose rate along the Phase A closed
/// loop is -k_d ||w_rel||^2.
double attitude_lyapunov(const Quaternion& q_rel, const Vec3& w_rel, double kp);

// ---------------------------------------------------------------------------
// Phase B: capture trajectory and coordination control.

class JointTrajectory {
 public:
  JointTrajectory() = default;
  JointTrajectory(const JointVector& theta_i, const JointVector& theta_f, double t_f);

  const JointVector& theta_i() const { return theta_i_; }
  const JointVector& theta_f() const { return theta_f_; }
  double t_f() const { return t_f_; }

  struct Sample {
    JointVector position;
    JointVector rate;
    JointVector acceleration;
  };
  /// Cubic rest-to-rest profile; held at theta_f for t >= t_f.
  Sample operator()(double t) const;

 private:
  JointVector theta_i_ = JointVector::Zero();
  JointVector theta_f_ = JointVector::Zero();
  double t_f_ = 0.0;
};

/// Minimum-time cubic with peak rate <= qd_max and peak acceleration <= qdd_max.
JointTrajectory plan_capture_trajectory(const JointVector& theta_i, const JointVector& theta_f, double qd_max,
                                        double qdd_max);

struct GainsB {
  double kp = 0.0;
  double kd = 0.0;
  double kw = 0.0;
  double kq = 0.0;
};

struct CoordinationInput {
  JointVector theta;
  JointVector theta_dot;
  Quaternion q_rel;
  Vec3 w_rel;
  Vec3 target_rate_in_base;       ///< A^T w_s
  Vec3 target_accel_ff = Vec3::Zero();  ///< A^T phi(w_s)
};

struct CoordinationTorques {
  Vec3 tau_r;
  JointVector tau_m;
};

/// Coordination law giving the decoupled closed loops
/// e_dd + k_d e_d + k_p e = 0 on joints and w_rel_dot + k_w w_rel + k_q q_v = 0.
CoordinationTorques phase_b_torques(const CoordinationInput& in, const JointTrajectory& traj,
                                    const ReducedDynamics& rd, const RobotInertiaSet& set, const GainsB& g,
                                    double t);

// ---------------------------------------------------------------------------
// Phase C: minimum-time detumbling under torque limits.

struct TorqueLimits {
  double tau_r_max = 0.0;
  double tau_e_max = 0.0;
};

/// Coefficients of a sigma^2 + b sigma + c <= 0 for both torque constraints.
struct SigmaQuadratics {
  double a1 = 0.0, b1 = 0.0, c1 = 0.0;
  double a2 = 0.0, b2 = 0.0, c2 = 0.0;
  double h = 0.0;  ///< ||M_t w_b||
};

SigmaQuadratics sigma_quadratics(const CompoundDynamics& cd, const Vec3& w_b, const TorqueLimits& lim,
                                 bool appendix_literal = false);

struct SigmaResult {
  enum class Status { Active, Complete };
  Status status = Status::Complete;
  double sigma = 0.0;
  double sigma_wheel = 0.0;     ///< largest root of the wheel-torque constraint
  double sigma_effector = 0.0;  ///< largest root of the end-effector constraint
  SigmaQuadratics coeffs;
};

/// Largest momentum decay rate satisfying both torque bounds,
/// sigma = min(sigma_1*, sigma_2*).  Reports Complete when ||M_t w_b|| <= eps_h
/// and throws InfeasibleError when a bound is violated at sigma = 0.
SigmaResult phase_c_sigma(const CompoundDynamics& cd, const Vec3& w_b, const TorqueLimits& lim, double eps_h,
                          bool appendix_literal = false);

/// tau_r = B^-1 (c_t - M_t w_b / ||M_t w_b|| sigma).
Vec3 phase_c_torque(const CompoundDynamics& cd, const Vec3& w_b, double sigma, double eps_h);

}  // namespace spinsim
