#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "spinsim/error.hpp"

using namespace spinsim;

namespace {

nlohmann::json reference_json() {
  std::ifstream in(SPINSIM_SOURCE_DIR "/configs/reference.json");
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

std::string validation_field(const nlohmann::json& doc) {
  try {
    parse_config(doc.dump());
  } catch (const ValidationError& e) {
    return e.field();
  }
  return {};
}

SystemModel massless_arm() {
  SystemModel m = reference_model();
  for (auto& link : m.arm.links) {
    link.body.mass = 0.0;
    link.body.inertia.setZero();
  }
  return m;
}

}  // namespace

TEST_CASE("reference configuration loads") {
  const SystemModel m = load_config(SPINSIM_SOURCE_DIR "/configs/reference.json");
  const SystemModel ref = reference_model();
  CHECK(m.base.inertia == ref.base.inertia);
  CHECK(m.target.mass == 200.0);
  CHECK(m.target.inertia == Mat3(Vec3(70, 70, 40).asDiagonal()));
  CHECK(m.target.grasp_offset == Vec3(-0.2, 0.1, -0.5));
  CHECK(m.target.lambda() == doctest::Approx(1.0 - 40.0 / 70.0));
  CHECK(m.servicer_mass() == doctest::Approx(164.0));
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK((forward_kinematics(m, m.initial.theta_i).link_com[i] -
           forward_kinematics(ref, ref.initial.theta_i).link_com[i]).norm() < 1e-12);
  }
}

TEST_CASE("invalid configurations name the offending field") {
  nlohmann::json doc = reference_json();

  SUBCASE("inertia violating the triangle inequality") {
    doc["base"]["inertia_kgm2"] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 10}};
    doc["base"]["allow_nonphysical_inertia"] = false;
    CHECK(validation_field(doc) == "base.inertia_kgm2");
  }
  SUBCASE("the triangle waiver does not admit indefinite tensors") {
    doc["base"]["inertia_kgm2"] = {{1, 0, 0}, {0, -1, 0}, {0, 0, 10}};
    CHECK(validation_field(doc) == "base.inertia_kgm2");
  }
  SUBCASE("non-positive limits") {
    doc["limits"]["tau_r_max_Nm"] = 0.0;
    CHECK(validation_field(doc) == "limits.tau_r_max_Nm");
  }
  SUBCASE("non-unit quaternion") {
    doc["initial"]["q_rel"] = {0.0, 0.0, 0.5, 0.5};
    CHECK(validation_field(doc) == "initial.q_rel");
  }
  SUBCASE("missing section") {
    doc.erase("target");
    CHECK(validation_field(doc) == "target");
  }
  SUBCASE("malformed text") {
    CHECK_THROWS_AS(parse_config("{ not json"), ValidationError);
  }
}

TEST_CASE("forward kinematics") {
  const SystemModel m = reference_model();

  SUBCASE("home pose: the arm stands straight up along base +z") {
    const ForwardKinematics fk = forward_kinematics(m, JointVector::Zero());
    CHECK((fk.r - Vec3(0, 0, 5.3)).norm() < 1e-12);
    const double com_z[] = {0.6, 1.7, 3.7, 4.8, 5.0, 5.2};
    for (int i = 0; i < kNumJoints; ++i) CHECK((fk.link_com[i] - Vec3(0, 0, com_z[i])).norm() < 1e-12);
  }

  std::mt19937_64 rng(11);
  SUBCASE("moving joint 1 keeps the end-effector distance to its axis") {
    const JointVector theta = oracle::random_joints(rng);
    const ForwardKinematics a = forward_kinematics(m, theta);
    JointVector turned = theta;
    turned[0] += 0.7;
    const ForwardKinematics b = forward_kinematics(m, turned);
    const auto dist = [&](const Vec3& p) {
      const Vec3 d = p - a.joint_position[0];
      return (d - d.dot(a.joint_axis[0]) * a.joint_axis[0]).norm();
    };
    CHECK(dist(a.r) == doctest::Approx(dist(b.r)).epsilon(1e-12));
    CHECK((a.r - a.joint_position[0]).dot(a.joint_axis[0]) ==
          doctest::Approx((b.r - a.joint_position[0]).dot(a.joint_axis[0])).epsilon(1e-12));
  }

  SUBCASE("matches an explicit homogeneous transform stack") {
    for (int k = 0; k < 100; ++k) {
      const JointVector theta = oracle::random_joints(rng);
      const ForwardKinematics fk = forward_kinematics(m, theta);
      const oracle::Frames f = oracle::stack_transforms(m, theta);
      CHECK((fk.r - f.tip.block<3, 1>(0, 3)).norm() < 1e-12);
      CHECK((fk.ee_rotation - f.tip.block<3, 3>(0, 0)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((quat_to_rotmat(fk.eta) - fk.ee_rotation).cwiseAbs().maxCoeff() < 1e-12);
      for (int i = 0; i < kNumJoints; ++i) CHECK((fk.link_com[i] - oracle::link_com(f, m, i)).norm() < 1e-12);
    }
  }
}

TEST_CASE("servicer centre of mass") {
  const SystemModel m = reference_model();
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const JointVector theta = oracle::random_joints(rng);
    const ForwardKinematics fk = forward_kinematics(m, theta);
    const Vec3 r_b = base_com_offset(m, fk);
    Vec3 moment = m.base.mass * r_b;
    for (int i = 0; i < kNumJoints; ++i) moment += m.arm.links[i].body.mass * (r_b + fk.link_com[i]);
    CHECK(moment.norm() < 1e-12);
  }

  const SystemModel light = massless_arm();
  CHECK(base_com_offset(light, oracle::random_joints(rng)).norm() == 0.0);
  CHECK(com_jacobian(light, oracle::random_joints(rng)).isZero(0.0));

  // Home pose by hand: link masses times the CoM heights listed above.
  const double moment_z = 1.0 * 0.6 + 5.0 * 1.7 + 5.0 * 3.7 + 1.0 * 4.8 + 1.0 * 5.0 + 1.0 * 5.2;
  CHECK((base_com_offset(m, JointVector::Zero()) - Vec3(0, 0, -moment_z / 164.0)).norm() < 1e-12);
}

TEST_CASE("jacobians match central finite differences") {
  const SystemModel m = reference_model();
  std::mt19937_64 rng(13);
  for (int k = 0; k < 100; ++k) {
    const JointVector theta = oracle::random_joints(rng);
    const Mat3x6 j_fd = oracle::central_difference<3>([&](const JointVector& q) { return base_com_offset(m, q); }, theta);
    CHECK((com_jacobian(m, theta) - j_fd).cwiseAbs().maxCoeff() < 1e-6);

    const EndEffectorJacobian je = end_effector_jacobian(m, theta);
    const Mat3x6 lin_fd =
        oracle::central_difference<3>([&](const JointVector& q) { return forward_kinematics(m, q).r; }, theta);
    CHECK((je.linear - lin_fd).cwiseAbs().maxCoeff() < 1e-6);

    // Angular rate from the rotation derivative: [w x] = R_dot R^T.
    const Mat3 r0 = forward_kinematics(m, theta).ee_rotation;
    const double h = 1e-6;
    for (int i = 0; i < kNumJoints; ++i) {
      JointVector plus = theta, minus = theta;
      plus[i] += h;
      minus[i] -= h;
      const Mat3 w = (forward_kinematics(m, plus).ee_rotation - forward_kinematics(m, minus).ee_rotation) /
                     (2 * h) * r0.transpose();
      CHECK((je.angular.col(i) - Vec3(w(2, 1), w(0, 2), w(1, 0))).cwiseAbs().maxCoeff() < 1e-6);
    }

    // Locked joints: the base CoM does not move.
    CHECK((com_jacobian(m, theta) * JointVector::Zero()).norm() == 0.0);
  }
}

TEST_CASE("grasp inverse kinematics") {
  const SystemModel m = reference_model();

  SUBCASE("current pose is a fixed point") {
    const JointVector theta = m.initial.theta_i;
    const ForwardKinematics fk = forward_kinematics(m, theta);
    const Vec3 grasp = fk.r + base_com_offset(m, fk);
    const Vec3 varrho(0.1, -0.2, 0.3);
    const JointVector sol = solve_final_joints(m, grasp - varrho, varrho, fk.eta, theta);
    CHECK((sol - theta).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("reference grasp closes both position and attitude") {
    const Quaternion eta_f = m.target.grasp_attitude;
    const JointVector sol = solve_final_joints(m, m.initial.rho, m.target.grasp_offset, eta_f, m.initial.theta_i);
    const ForwardKinematics fk = forward_kinematics(m, sol);
    const Vec3 closure = fk.r + base_com_offset(m, fk) - m.initial.rho - m.target.grasp_offset;
    CHECK(closure.norm() < 1e-8);
    CHECK(quat_error(eta_f, fk.eta).vec().norm() < 1e-8);
  }

  SUBCASE("unreachable grasp") {
    CHECK_THROWS_AS(solve_final_joints(m, Vec3(0, 0, 100), m.target.grasp_offset, m.target.grasp_attitude,
                                       m.initial.theta_i),
                    NoSolutionError);
  }
}
