#include "spinsim/dynamics.hpp"

#include <array>

#include "spinsim/error.hpp"

namespace spinsim {

namespace {

// Plücker transform from parent coordinates into child coordinates:
// E rotates parent coordinates into child coordinates, r is the child
// origin in parent coordinates.
struct Transform {
  Mat3 E = Mat3::Identity();
  Vec3 r = Vec3::Zero();

  Vec6 apply_motion(const Vec6& m) const {
    Vec6 out;
    out.head<3>() = E * m.head<3>();
    out.tail<3>() = E * (m.tail<3>() - r.cross(m.head<3>()));
    return out;
  }

  // Child-coordinate force to parent coordinates (X^T f).
  Vec6 apply_force_transpose(const Vec6& f) const {
    Vec6 out;
    const Vec3 lin = E.transpose() * f.tail<3>();
    out.head<3>() = E.transpose() * f.head<3>() + r.cross(lin);
    out.tail<3>() = lin;
    return out;
  }

  Mat6 matrix() const {
    Mat6 x = Mat6::Zero();
    x.topLeftCorner<3, 3>() = E;
    x.bottomLeftCorner<3, 3>() = -E * skew(r);
    x.bottomRightCorner<3, 3>() = E;
    return x;
  }
};

Mat6 spatial_inertia(const BodyParams& body, const Vec3& com) {
  const Mat3 c = skew(com);
  Mat6 i;
  i.topLeftCorner<3, 3>() = body.inertia + body.mass * c * c.transpose();
  i.topRightCorner<3, 3>() = body.mass * c;
  i.bottomLeftCorner<3, 3>() = body.mass * c.transpose();
  i.bottomRightCorner<3, 3>() = body.mass * Mat3::Identity();
  return i;
}

Vec6 cross_motion(const Vec6& v, const Vec6& m) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(m.head<3>());
  out.tail<3>() = v.tail<3>().cross(m.head<3>()) + v.head<3>().cross(m.tail<3>());
  return out;
}

Vec6 cross_force(const Vec6& v, const Vec6& f) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = v.head<3>().cross(f.tail<3>());
  return out;
}

struct Chain {
  std::array<Transform, kNumJoints> X;
  std::array<Vec6, kNumJoints> S;
  std::array<Mat6, kNumJoints + 1> I;  // index 0 is the base
};

Chain build_chain(const SystemModel& model, const JointVector& theta) {
  Chain chain;
  chain.I[0] = spatial_inertia(model.base, Vec3::Zero());
  for (int i = 0; i < kNumJoints; ++i) {
    const Link& link = model.arm.links[i];
    const Mat3 rel = link.joint.rotation * Eigen::AngleAxisd(theta[i], link.joint.axis).toRotationMatrix();
    chain.X[i].E = rel.transpose();
    chain.X[i].r = i == 0 ? Vec3(link.joint.origin - model.base.com) : link.joint.origin;
    chain.S[i] << link.joint.axis, Vec3::Zero();
    chain.I[i + 1] = spatial_inertia(link.body, link.body.com);
  }
  return chain;
}

constexpr int joint_index(int i) { return 6 + i; }

}  // namespace

FloatingMatrix crba(const SystemModel& model, const JointVector& theta) {
  const Chain chain = build_chain(model, theta);
  std::array<Mat6, kNumJoints + 1> ic = chain.I;
  for (int i = kNumJoints - 1; i >= 0; --i) {
    const Mat6 x = chain.X[i].matrix();
    ic[i] += x.transpose() * ic[i + 1] * x;
  }

  FloatingMatrix m = FloatingMatrix::Zero();
  m.topLeftCorner<6, 6>() = ic[0];
  for (int i = 0; i < kNumJoints; ++i) {
    Vec6 f = ic[i + 1] * chain.S[i];
    m(joint_index(i), joint_index(i)) = chain.S[i].dot(f);
    for (int j = i; j >= 0; --j) {
      f = chain.X[j].apply_force_transpose(f);
      if (j > 0) {
        const double v = chain.S[j - 1].dot(f);
        m(joint_index(i), joint_index(j - 1)) = v;
        m(joint_index(j - 1), joint_index(i)) = v;
      }
    }
    m.block<6, 1>(0, joint_index(i)) = f;
    m.block<1, 6>(joint_index(i), 0) = f.transpose();
  }
  return m;
}

FloatingVector rnea(const SystemModel& model, const JointVector& theta, const FloatingVector& nu,
                    const FloatingVector& nu_dot) {
  const Chain chain = build_chain(model, theta);
  std::array<Vec6, kNumJoints + 1> v;
  std::array<Vec6, kNumJoints + 1> a;
  std::array<Vec6, kNumJoints + 1> f;
  v[0] = nu.head<6>();
  a[0] = nu_dot.head<6>();
  f[0] = chain.I[0] * a[0] + cross_force(v[0], chain.I[0] * v[0]);
  for (int i = 0; i < kNumJoints; ++i) {
    const double qd = nu[joint_index(i)];
    const double qdd = nu_dot[joint_index(i)];
    v[i + 1] = chain.X[i].apply_motion(v[i]) + chain.S[i] * qd;
    a[i + 1] = chain.X[i].apply_motion(a[i]) + chain.S[i] * qdd + cross_motion(v[i + 1], chain.S[i]) * qd;
    f[i + 1] = chain.I[i + 1] * a[i + 1] + cross_force(v[i + 1], chain.I[i + 1] * v[i + 1]);
  }

  FloatingVector tau;
  for (int i = kNumJoints - 1; i >= 0; --i) {
    tau[joint_index(i)] = chain.S[i].dot(f[i + 1]);
    f[i] += chain.X[i].apply_force_transpose(f[i + 1]);
  }
  tau.head<6>() = f[0];
  return tau;
}

Vec3 zero_momentum_base_velocity(const FloatingMatrix& m, const Vec3& w_b, const JointVector& theta_dot) {
  const Vec3 p = m.block<3, 3>(3, 0) * w_b + m.block<3, kNumJoints>(3, 6) * theta_dot;
  return -m.block<3, 3>(3, 3).ldlt().solve(p);
}

Eigen::Matrix<double, 12, 12> RobotInertiaSet::full_inertia() const {
  Eigen::Matrix<double, 12, 12> m = Eigen::Matrix<double, 12, 12>::Zero();
  m.block<3, 3>(0, 0) = M_b_tilde;
  m.block<3, 6>(0, 3) = M_bm;
  m.block<6, 3>(3, 0) = M_bm.transpose();
  m.block<3, 3>(0, 9) = M_br;
  m.block<3, 3>(9, 0) = M_br.transpose();
  m.block<6, 6>(3, 3) = M_m;
  m.block<3, 3>(9, 9) = M_r;
  return m;
}

RobotInertiaSet assemble(const SystemModel& model, const JointVector& theta, const Vec3& w_b,
                         const JointVector& theta_dot, const Vec3& h_r) {
  const FloatingMatrix m = crba(model, theta);

  // Schur complement on the base translation: with zero linear momentum the
  // translational DOFs are cyclic and drop out.
  std::array<int, kReducedDofs> keep{0, 1, 2, 6, 7, 8, 9, 10, 11};
  const Mat3 m_vv_inv = m.block<3, 3>(3, 3).inverse();
  Eigen::Matrix<double, kReducedDofs, 3> m_yv;
  ReducedMatrix m_yy;
  for (int r = 0; r < kReducedDofs; ++r) {
    m_yv.row(r) = m.block<1, 3>(keep[r], 3);
    for (int c = 0; c < kReducedDofs; ++c) {
      m_yy(r, c) = m(keep[r], keep[c]);
    }
  }
  const ReducedMatrix m_red = m_yy - m_yv * m_vv_inv * m_yv.transpose();

  FloatingVector nu;
  nu << w_b, zero_momentum_base_velocity(m, w_b, theta_dot), theta_dot;
  const FloatingVector c_full = rnea(model, theta, nu, FloatingVector::Zero());
  ReducedVector c_y;
  for (int r = 0; r < kReducedDofs; ++r) {
    c_y[r] = c_full[keep[r]];
  }
  const ReducedVector c_red = c_y - m_yv * m_vv_inv * c_full.segment<3>(3);

  RobotInertiaSet set;
  set.M_b_tilde = m_red.topLeftCorner<3, 3>();
  set.M_bm = m_red.topRightCorner<3, kNumJoints>();
  set.M_m = m_red.bottomRightCorner<kNumJoints, kNumJoints>();
  set.M_br = model.wheels.inertia * model.wheels.axes;
  set.M_r = model.wheels.inertia * Mat3::Identity();

  // Wheel rates from the axial momenta h_r = M_br^T w_b + M_r phi_dot.
  const Vec3 phi_dot = model.wheels.inertia > 0.0
                           ? Vec3(set.M_r.inverse() * (h_r - set.M_br.transpose() * w_b))
                           : Vec3::Zero();
  set.c_b_tilde = c_red.head<3>() + w_b.cross(set.M_br * phi_dot);
  set.c_m = c_red.tail<kNumJoints>();
  set.c_r = Vec3::Zero();

  const ForwardKinematics fk = forward_kinematics(model, theta);
  set.r_b = base_com_offset(model, fk);
  set.ee_position = set.r_b + fk.r;
  const EndEffectorJacobian ee = end_effector_jacobian(model, theta);
  set.J_b.topRows<3>() = -skew(set.ee_position);
  set.J_b.bottomRows<3>() = Mat3::Identity();
  set.J_m.topRows<3>() = ee.linear + com_jacobian(model, theta);
  set.J_m.bottomRows<3>() = ee.angular;
  return set;
}

Mat3 ReducedDynamics::B_inverse() const {
  const Eigen::FullPivLU<Mat3> lu(B);
  if (!lu.isInvertible()) {
    throw ConfigurationError("wheel torque map B is singular");
  }
  return lu.inverse();
}

ReducedDynamics reduce(const RobotInertiaSet& set) {
  const Eigen::FullPivLU<Mat3> lu(set.M_r);
  if (!lu.isInvertible() || set.M_r.cwiseAbs().maxCoeff() == 0.0) {
    throw ConfigurationError("wheel inertia matrix M_r is singular (zero rotor inertia?)");
  }
  ReducedDynamics rd;
  rd.B = -set.M_br * lu.inverse();
  rd.M_b = set.M_b_tilde + rd.B * set.M_br.transpose();
  rd.c_b = set.c_b_tilde + rd.B * set.c_r;
  return rd;
}

ReducedMatrix generalized_inertia(const RobotInertiaSet& set, const ReducedDynamics& rd) {
  ReducedMatrix m;
  m.topLeftCorner<3, 3>() = rd.M_b;
  m.topRightCorner<3, kNumJoints>() = set.M_bm;
  m.bottomLeftCorner<kNumJoints, 3>() = set.M_bm.transpose();
  m.bottomRightCorner<kNumJoints, kNumJoints>() = set.M_m;
  return m;
}

Vec3 target_euler_rate(const TargetModel& target, const Vec3& w_s) {
  return target.lambda() * Vec3(w_s.y() * w_s.z(), -w_s.x() * w_s.z(), 0.0);
}

Accelerations forward_dynamics(const SystemModel& model, const ServicerState& state, const Vec3& tau_r,
                               const JointVector& tau_m, const Vec6& n_e, JointMode mode) {
  const JointVector qd = mode == JointMode::Locked ? JointVector::Zero() : state.theta_dot;
  const RobotInertiaSet set = assemble(model, state.theta, state.w_b, qd, state.h_r);
  const ReducedDynamics rd = reduce(set);

  Accelerations acc;
  if (mode == JointMode::Locked) {
    const Vec3 rhs = rd.B * tau_r - rd.c_b + set.J_b.transpose() * n_e;
    const Eigen::LLT<Mat3> llt(rd.M_b);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("base inertia M_b is not positive definite");
    }
    acc.w_b_dot = llt.solve(rhs);
    return acc;
  }

  ReducedVector rhs;
  rhs.head<3>() = rd.B * tau_r - rd.c_b + set.J_b.transpose() * n_e;
  rhs.tail<kNumJoints>() = tau_m - set.c_m + set.J_m.transpose() * n_e;
  const Eigen::LLT<ReducedMatrix> llt(generalized_inertia(set, rd));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("generalized inertia M(theta) is not positive definite");
  }
  const ReducedVector x = llt.solve(rhs);
  acc.w_b_dot = x.head<3>();
  acc.theta_ddot = x.tail<kNumJoints>();
  return acc;
}

ServicerMomentum servicer_momentum(const RobotInertiaSet& set, const ReducedDynamics& rd,
                                   const ServicerState& state) {
  return {rd.M_b * state.w_b + set.M_bm * state.theta_dot, -rd.B * state.h_r};
}

CompoundDynamics compound(const SystemModel& model, const JointVector& theta_locked, const Vec3& w_b,
                          const Vec3& h_r) {
  const RobotInertiaSet set = assemble(model, theta_locked, w_b, JointVector::Zero(), h_r);
  const ReducedDynamics rd = reduce(set);
  const TargetModel& target = model.target;

  CompoundDynamics cd;
  cd.B = rd.B;
  cd.target_mass = target.mass;
  cd.target_offset = set.ee_position - target.grasp_offset;
  const double m_v = model.servicer_mass();
  cd.rho_s = cd.target_offset * m_v / (m_v + target.mass);

  // Grapple wrench n_e = [f_e; tau_e] maps onto the target CoM wrench through
  // [[I, 0], [[varrho x], I]]; its lower block row is J_s^T.
  Mat6 phi = Mat6::Identity();
  phi.bottomLeftCorner<3, 3>() = skew(target.grasp_offset);
  const Eigen::CompleteOrthogonalDecomposition<Mat6> cod(phi);
  if (cod.rank() < 6) {
    throw NumericalError("grapple wrench map is rank deficient (rank " + std::to_string(cod.rank()) + ")");
  }
  const Mat6 phi_pinv = cod.pseudoInverse();

  const Mat3& ic = target.inertia;
  Mat6x3 gamma;
  gamma.topRows<3>() = -target.mass * skew(cd.rho_s);
  gamma.bottomRows<3>() = ic;
  Vec6 gamma_v;
  gamma_v.head<3>() = target.mass * w_b.cross(w_b.cross(cd.rho_s));
  gamma_v.tail<3>() = w_b.cross(ic * w_b);

  const Eigen::Matrix<double, 3, 6> jbt = set.J_b.transpose();
  cd.M_t = rd.M_b + jbt * phi_pinv * gamma;
  cd.c_t = rd.c_b + jbt * phi_pinv * gamma_v;

  cd.M_s = ic + target.mass * skew(target.grasp_offset) * skew(cd.rho_s);
  cd.c_s = w_b.cross(ic * w_b) - target.mass * target.grasp_offset.cross(w_b.cross(w_b.cross(cd.rho_s)));

  const Eigen::PartialPivLU<Mat3> mt(cd.M_t);
  cd.G = -cd.M_s * mt.solve(cd.B);
  cd.c_g = cd.M_s * mt.solve(cd.c_t) - cd.c_s;
  return cd;
}

Vec3 compound_acceleration(const CompoundDynamics& cd, const Vec3& tau_r) {
  return cd.M_t.partialPivLu().solve(cd.B * tau_r - cd.c_t);
}

Vec3 end_effector_force(double target_mass, const Vec3& rho_s, const Vec3& w_b, const Vec3& w_b_dot) {
  return -target_mass * (w_b_dot.cross(rho_s) + w_b.cross(w_b.cross(rho_s)));
}

Vec3 torque_transmission(const CompoundDynamics& cd, const Vec3& tau_r) { return cd.G * tau_r + cd.c_g; }

}  // namespace spinsim
