#include "spinsim/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spinsim/error.hpp"

namespace spinsim {

namespace {

Mat3 axis_rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

Link make_link(std::string name, double mass, double length, const Vec3& inertia_diag,
               const Vec3& origin, const Mat3& rotation, const Vec3& axis) {
  Link link;
  link.name = std::move(name);
  link.body.mass = mass;
  link.body.com = Vec3(0.5 * length, 0.0, 0.0);
  link.body.inertia = inertia_diag.asDiagonal();
  link.length = length;
  link.joint.origin = origin;
  link.joint.rotation = rotation;
  link.joint.axis = axis;
  return link;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) {
    throw ValidationError(field, message);
  }
}

void validate_inertia(const Mat3& inertia, const std::string& field, bool check_triangle = true) {
  require(inertia.allFinite(), field, "inertia has non-finite entries");
  const double scale = inertia.cwiseAbs().maxCoeff();
  require((inertia - inertia.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(scale, 1.0),
          field, "inertia is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  const Vec3 p = eig.eigenvalues();
  require(p.minCoeff() > 0.0, field, "inertia is not positive definite");
  if (!check_triangle) return;
  const double tol = 1e-9 * p.sum();
  require(p[0] + p[1] >= p[2] - tol && p[0] + p[2] >= p[1] - tol && p[1] + p[2] >= p[0] - tol,
          field, "principal moments violate the triangle inequality");
}

void validate_body(const BodyParams& body, const std::string& field) {
  require(std::isfinite(body.mass) && body.mass > 0.0, field + ".mass_kg", "mass must be positive");
  require(body.com.allFinite(), field + ".com_m", "CoM must be finite");
  validate_inertia(body.inertia, field + ".inertia_kgm2", !body.allow_nonphysical_inertia);
}

void validate_unit(const Vec3& v, const std::string& field) {
  require(v.allFinite() && std::abs(v.norm() - 1.0) <= 1e-9, field, "must be a unit vector");
}

}  // namespace

double SystemModel::arm_mass() const {
  double m = 0.0;
  for (const auto& link : arm.links) {
    m += link.body.mass;
  }
  return m;
}

SystemModel reference_model() {
  SystemModel model;
  model.base.mass = 150.0;
  model.base.com = Vec3::Zero();
  model.base.inertia << 120.0, 30.0, -40.0,
                        30.0, 70.0, 20.0,
                        -40.0, 20.0, 100.0;
  // This base tensor is positive definite but not realizable by any
  // mass distribution (34.6 + 102.3 < 153.1 on the principal moments).
  model.base.allow_nonphysical_inertia = true;

  // Arm column points along base +z; each link extends along its local x.
  const Mat3 mount = axis_rotation(Vec3::UnitY(), -0.5 * std::numbers::pi);
  const Vec3 small(0.01, 0.02, 0.02);
  const Vec3 large(0.01, 2.0, 2.0);
  auto& links = model.arm.links;
  links[0] = make_link("shoulder_yaw", 1.0, 0.2, small, Vec3(0.0, 0.0, 0.5), mount, Vec3::UnitX());
  links[1] = make_link("upper_arm", 5.0, 2.0, large, Vec3(0.2, 0.0, 0.0), Mat3::Identity(), Vec3::UnitZ());
  links[2] = make_link("forearm", 5.0, 2.0, large, Vec3(2.0, 0.0, 0.0), Mat3::Identity(), Vec3::UnitZ());
  links[3] = make_link("wrist_pitch", 1.0, 0.2, small, Vec3(2.0, 0.0, 0.0), Mat3::Identity(), Vec3::UnitZ());
  links[4] = make_link("wrist_yaw", 1.0, 0.2, small, Vec3(0.2, 0.0, 0.0), Mat3::Identity(), Vec3::UnitY());
  links[5] = make_link("wrist_roll", 1.0, 0.2, small, Vec3(0.2, 0.0, 0.0), Mat3::Identity(), Vec3::UnitX());
  model.arm.qd_max = 0.1;
  model.arm.qdd_max = 0.02;

  model.wheels.axes = Mat3::Identity();
  model.wheels.inertia = 0.05;

  model.target.mass = 200.0;
  model.target.inertia = Vec3(70.0, 70.0, 40.0).asDiagonal();
  model.target.grasp_offset = Vec3(-0.2, 0.1, -0.5);
  model.target.grasp_attitude = Quaternion::from_rotation(mount);

  model.limits.qd_max = model.arm.qd_max;
  model.limits.qdd_max = model.arm.qdd_max;
  model.limits.tau_r_max = 0.1;
  model.limits.tau_e_max = 0.05;

  model.gains = Gains::from_bandwidth(1.8);

  model.initial.omega_s = Vec3(0.0, 0.0, 1.06 / 40.0);
  model.initial.q_rel = Quaternion::from_axis_angle(Vec3(1.0, 1.0, 1.0), std::numbers::pi / 6.0);
  model.initial.theta_i << 0.0, 1.2, -2.0, 0.8, 0.0, 0.0;
  model.initial.rho = Vec3(0.0, 0.0, 4.0);
  return model;
}

void validate(const SystemModel& model) {
  validate_body(model.base, "base");
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& link = model.arm.links[i];
    const std::string field = "links[" + std::to_string(i) + "]";
    validate_body(link.body, field);
    require(std::isfinite(link.length) && link.length >= 0.0, field + ".length_m",
            "length must be non-negative");
    validate_unit(link.joint.axis, field + ".axis");
    require(link.joint.origin.allFinite(), field + ".origin_m", "origin must be finite");
    const Mat3& r = link.joint.rotation;
    require((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9 &&
                std::abs(r.determinant() - 1.0) <= 1e-9,
            field + ".rotation_q", "rotation must be proper orthonormal");
  }
  require(model.arm.qd_max > 0.0, "limits.qd_max_rad_s", "must be positive");
  require(model.arm.qdd_max > 0.0, "limits.qdd_max_rad_s2", "must be positive");

  for (int j = 0; j < 3; ++j) {
    validate_unit(model.wheels.axes.col(j), "wheels.axes[" + std::to_string(j) + "]");
  }
  require(std::abs(model.wheels.axes.determinant()) > 1e-6, "wheels.axes",
          "wheel axes must span three dimensions");
  require(std::isfinite(model.wheels.inertia) && model.wheels.inertia > 0.0, "wheels.inertia_kgm2",
          "rotor inertia must be positive");

  const auto& target = model.target;
  require(std::isfinite(target.mass) && target.mass > 0.0, "target.mass_kg", "mass must be positive");
  validate_inertia(target.inertia, "target.inertia_kgm2");
  const Mat3& ic = target.inertia;
  const double off = std::abs(ic(0, 1)) + std::abs(ic(0, 2)) + std::abs(ic(1, 2));
  require(off <= 1e-12 * ic.trace(), "target.inertia_kgm2",
          "target inertia must be diagonal in the target frame");
  require(std::abs(ic(0, 0) - ic(1, 1)) <= 1e-12 * ic(0, 0), "target.inertia_kgm2",
          "target must be axisymmetric (I_xx == I_yy)");
  require(target.grasp_offset.allFinite(), "target.grasp_offset_m", "must be finite");
  require(std::abs(target.grasp_attitude.norm() - 1.0) <= 1e-9, "target.grasp_attitude_q",
          "must be a unit quaternion");

  const auto& lim = model.limits;
  require(lim.tau_r_max > 0.0, "limits.tau_r_max_Nm", "must be positive");
  require(lim.tau_e_max > 0.0, "limits.tau_e_max_Nm", "must be positive");

  const auto& g = model.gains;
  require(g.kp > 0.0 && g.kd > 0.0 && g.joint_kp > 0.0 && g.joint_kd > 0.0 && g.kw > 0.0 && g.kq > 0.0,
          "gains", "all gains must be strictly positive");

  const auto& init = model.initial;
  require(std::abs(init.q_rel.norm() - 1.0) <= 1e-9, "initial.q_rel", "must be a unit quaternion");
  require(init.omega_s.allFinite(), "initial.omega_s_rad_s", "must be finite");
  require(init.theta_i.allFinite(), "initial.theta_i_rad", "must be finite");
  require(init.rho.allFinite() && init.rho.norm() > 0.0, "initial.rho_m", "must be a nonzero vector");
  const double ws = init.omega_s.norm();
  if (ws > 0.0) {
    require(init.rho.cross(init.omega_s).norm() <= 1e-9 * init.rho.norm() * ws, "initial.rho_m",
            "servicer CoM must lie on the target spin axis (rho parallel to omega_s)");
  }

  const auto& s = model.sim;
  require(std::isfinite(s.dt) && s.dt > 0.0, "sim.dt_s", "must be positive");
  require(s.t_end > 0.0, "sim.t_end_s", "must be positive");
  require(s.telemetry_decimation >= 1, "sim.telemetry_decimation", "must be >= 1");
  require(s.omega_tol > 0.0 && s.q_tol > 0.0, "sim.tolerances", "must be positive");
  require(s.dwell >= 0.0 && s.settle >= 0.0, "sim.windows", "must be non-negative");
  require(s.eps_h > 0.0, "sim.eps_h_Nms", "must be positive");
}

ForwardKinematics forward_kinematics(const SystemModel& model, const JointVector& theta) {
  ForwardKinematics fk;
  Vec3 p = -model.base.com;
  Mat3 r = Mat3::Identity();
  for (int i = 0; i < kNumJoints; ++i) {
    const Link& link = model.arm.links[i];
    p = p + r * link.joint.origin;
    const Mat3 frame = r * link.joint.rotation;
    fk.joint_position[i] = p;
    fk.joint_axis[i] = frame * link.joint.axis;
    r = frame * axis_rotation(link.joint.axis, theta[i]);
    fk.link_rotation[i] = r;
    fk.link_com[i] = p + r * link.body.com;
  }
  const Link& last = model.arm.links.back();
  fk.r = p + r * Vec3(last.length, 0.0, 0.0);
  fk.ee_rotation = r;
  fk.eta = Quaternion::from_rotation(r);
  return fk;
}

Vec3 base_com_offset(const SystemModel& model, const ForwardKinematics& fk) {
  Vec3 moment = Vec3::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    moment += model.arm.links[i].body.mass * fk.link_com[i];
  }
  return -moment / model.servicer_mass();
}

Vec3 base_com_offset(const SystemModel& model, const JointVector& theta) {
  return base_com_offset(model, forward_kinematics(model, theta));
}

Mat3x6 com_jacobian(const SystemModel& model, const JointVector& theta) {
  const ForwardKinematics fk = forward_kinematics(model, theta);
  Mat3x6 j = Mat3x6::Zero();
  for (int col = 0; col < kNumJoints; ++col) {
    Vec3 acc = Vec3::Zero();
    for (int i = col; i < kNumJoints; ++i) {
      acc += model.arm.links[i].body.mass * fk.joint_axis[col].cross(fk.link_com[i] - fk.joint_position[col]);
    }
    j.col(col) = -acc / model.servicer_mass();
  }
  return j;
}

EndEffectorJacobian end_effector_jacobian(const SystemModel& model, const JointVector& theta) {
  const ForwardKinematics fk = forward_kinematics(model, theta);
  EndEffectorJacobian j;
  for (int col = 0; col < kNumJoints; ++col) {
    j.linear.col(col) = fk.joint_axis[col].cross(fk.r - fk.joint_position[col]);
    j.angular.col(col) = fk.joint_axis[col];
  }
  return j;
}

GraspResidual grasp_residual(const SystemModel& model, const JointVector& theta, const Vec3& rho,
                             const Vec3& varrho, const Quaternion& eta_f) {
  const ForwardKinematics fk = forward_kinematics(model, theta);
  GraspResidual res;
  res.position = fk.r + base_com_offset(model, fk) - rho - varrho;
  res.attitude = (eta_f.conjugate() * fk.eta).canonical().vec();
  return res;
}

JointVector solve_final_joints(const SystemModel& model, const Vec3& rho, const Vec3& varrho,
                               const Quaternion& eta_f, const JointVector& seed,
                               const IkOptions& options) {
  const Mat3 r_goal = quat_to_rotmat(eta_f.normalized());
  const Vec3 p_goal = rho + varrho;
  const double lambda2 = options.damping * options.damping;

  JointVector theta = seed;
  double residual = 0.0;
  Eigen::Matrix<double, 6, kNumJoints> jac;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    const ForwardKinematics fk = forward_kinematics(model, theta);
    Vec6 err;
    err.head<3>() = p_goal - fk.r - base_com_offset(model, fk);
    const Eigen::AngleAxisd aa(r_goal * fk.ee_rotation.transpose());
    err.tail<3>() = aa.angle() * aa.axis();
    residual = err.norm();
    if (residual < options.tolerance || iter == options.max_iterations) {
      break;
    }
    const EndEffectorJacobian ee = end_effector_jacobian(model, theta);
    jac.topRows<3>() = ee.linear + com_jacobian(model, theta);
    jac.bottomRows<3>() = ee.angular;
    const Mat6 jjt = jac * jac.transpose() + lambda2 * Mat6::Identity();
    theta += jac.transpose() * jjt.ldlt().solve(err);
  }

  if (residual > 1e-8) {
    const EndEffectorJacobian ee = end_effector_jacobian(model, theta);
    jac.topRows<3>() = ee.linear + com_jacobian(model, theta);
    jac.bottomRows<3>() = ee.angular;
    const Eigen::JacobiSVD<Eigen::Matrix<double, 6, kNumJoints>> svd(jac);
    const auto sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                                 : std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "grasp pose not reachable: residual " << residual << " after " << options.max_iterations
       << " iterations (Jacobian condition number " << cond
       << (cond > 1e8 ? ", singular configuration" : "") << ")";
    throw NoSolutionError(os.str(), residual);
  }
  return theta;
}

}  // namespace spinsim
