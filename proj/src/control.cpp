#include "spinsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinsim/error.hpp"

namespace spinsim {

Vec3 phase_a_torque(const Quaternion& q_rel, const Vec3& w_rel, const ReducedDynamics& rd, const GainsA& g,
                    const Vec3& target_accel_ff) {
  const Vec3 accel = -g.kp * q_rel.vec() - g.kd * w_rel + target_accel_ff;
  return rd.B_inverse() * (rd.c_b + rd.M_b * accel);
}

double attitude_lyapunov(const Quaternion& q_rel, const Vec3& w_rel, double kp) {
  const Vec4 e = q_rel.coeffs() - Vec4(0.0, 0.0, 0.0, 1.0);
  return kp * e.squaredNorm() + 0.5 * w_rel.squaredNorm();
}

JointTrajectory::JointTrajectory(const JointVector& theta_i, const JointVector& theta_f, double t_f)
    : theta_i_(theta_i), theta_f_(theta_f), t_f_(t_f) {}

JointTrajectory::Sample JointTrajectory::operator()(double t) const {
  Sample s;
  if (t_f_ <= 0.0 || t >= t_f_) {
    s.position = t_f_ <= 0.0 && t < 0.0 ? theta_i_ : theta_f_;
    s.rate.setZero();
    // The endpoint keeps the profile's own deceleration so that integrator
    // stages landing exactly on t_f see a continuous reference.
    s.acceleration = t_f_ > 0.0 && t == t_f_ ? JointVector(-6.0 * (theta_f_ - theta_i_) / (t_f_ * t_f_))
                                               : JointVector::Zero();
    return s;
  }
  const double tau = std::max(t, 0.0) / t_f_;
  const JointVector delta = theta_f_ - theta_i_;
  s.position = theta_i_ + (3.0 * tau * tau - 2.0 * tau * tau * tau) * delta;
  s.rate = (6.0 * tau - 6.0 * tau * tau) * delta / t_f_;
  s.acceleration = (6.0 - 12.0 * tau) * delta / (t_f_ * t_f_);
  return s;
}

JointTrajectory plan_capture_trajectory(const JointVector& theta_i, const JointVector& theta_f, double qd_max,
                                        double qdd_max) {
  if (!(qd_max > 0.0) || !(qdd_max > 0.0)) {
    throw ConfigurationError("joint rate and acceleration limits must be positive");
  }
  const double span = (theta_f - theta_i).cwiseAbs().maxCoeff();
  const double t_rate = 1.5 * span / qd_max;
  const double t_accel = std::sqrt(6.0 * span / qdd_max);
  return {theta_i, theta_f, std::max(t_rate, t_accel)};
}

CoordinationTorques phase_b_torques(const CoordinationInput& in, const JointTrajectory& traj,
                                    const ReducedDynamics& rd, const RobotInertiaSet& set, const GainsB& g,
                                    double t) {
  const JointTrajectory::Sample ref = traj(t);
  const JointVector u_joint = ref.acceleration + g.kd * (ref.rate - in.theta_dot) +
                              g.kp * (ref.position - in.theta);
  const Vec3 u_base = -in.w_rel.cross(in.target_rate_in_base) + in.target_accel_ff - g.kw * in.w_rel -
                      g.kq * in.q_rel.vec();

  CoordinationTorques out;
  out.tau_r = rd.B_inverse() * (rd.c_b + rd.M_b * u_base + set.M_bm * u_joint);
  out.tau_m = set.c_m + set.M_bm.transpose() * u_base + set.M_m * u_joint;
  return out;
}

SigmaQuadratics sigma_quadratics(const CompoundDynamics& cd, const Vec3& w_b, const TorqueLimits& lim,
                                 bool appendix_literal) {
  SigmaQuadratics q;
  const Vec3 momentum = cd.M_t * w_b;
  q.h = momentum.norm();
  const Vec3 u = momentum / q.h;
  const Mat3 b_inv = cd.B.inverse();
  const Vec3 bu = b_inv * u;
  const Vec3 bc = b_inv * cd.c_t;
  const Vec3 gbu = cd.G * bu;
  const Vec3 gbc = cd.G * bc;

  q.a1 = bu.squaredNorm();
  q.b1 = -2.0 * bc.dot(bu);
  q.c1 = bc.squaredNorm() - std::pow(appendix_literal ? lim.tau_e_max : lim.tau_r_max, 2);

  q.a2 = gbu.squaredNorm();
  q.b2 = -2.0 * (gbc.dot(gbu) + cd.c_g.dot(gbu));
  q.c2 = gbc.squaredNorm() + cd.c_g.squaredNorm() + 2.0 * cd.c_g.dot(gbc) - lim.tau_e_max * lim.tau_e_max;
  return q;
}

namespace {

// Largest sigma with a sigma^2 + b sigma + c = 0, given c <= 0.
double largest_root(double a, double b, double c) {
  if (a == 0.0) {
    return b > 0.0 ? -c / b : std::numeric_limits<double>::infinity();
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double s = std::sqrt(disc);
  // Avoid cancellation between -b and s.
  return b <= 0.0 ? (-b + s) / (2.0 * a) : (2.0 * c) / (-b - s);
}

}  // namespace

SigmaResult phase_c_sigma(const CompoundDynamics& cd, const Vec3& w_b, const TorqueLimits& lim, double eps_h,
                          bool appendix_literal) {
  SigmaResult res;
  if ((cd.M_t * w_b).norm() <= eps_h) {
    res.status = SigmaResult::Status::Complete;
    return res;
  }
  res.status = SigmaResult::Status::Active;
  res.coeffs = sigma_quadratics(cd, w_b, lim, appendix_literal);
  const auto& q = res.coeffs;
  if (q.c1 > 0.0) {
    throw InfeasibleError("nonlinear terms alone exceed the wheel torque limit (c1 = " + std::to_string(q.c1) + ")",
                          "wheel_torque");
  }
  if (q.c2 > 0.0) {
    throw InfeasibleError(
        "nonlinear terms alone exceed the end-effector torque limit (c2 = " + std::to_string(q.c2) + ")",
        "end_effector_torque");
  }
  res.sigma_wheel = largest_root(q.a1, q.b1, q.c1);
  res.sigma_effector = largest_root(q.a2, q.b2, q.c2);
  if (std::isnan(res.sigma_wheel) || std::isnan(res.sigma_effector)) {
    throw InfeasibleError("torque constraint has no real root", std::isnan(res.sigma_wheel) ? "wheel_torque"
                                                                                             : "end_effector_torque");
  }
  res.sigma = std::min(res.sigma_wheel, res.sigma_effector);
  if (!std::isfinite(res.sigma)) {
    throw NumericalError("decay rate is unbounded: both torque constraints are degenerate");
  }
  res.sigma = std::max(res.sigma, 0.0);
  return res;
}

Vec3 phase_c_torque(const CompoundDynamics& cd, const Vec3& w_b, double sigma, double eps_h) {
  const Vec3 momentum = cd.M_t * w_b;
  const double h = momentum.norm();
  if (h <= eps_h) {
    return Vec3::Zero();
  }
  return cd.B.inverse() * (cd.c_t - momentum / h * sigma);
}

}  // namespace spinsim
