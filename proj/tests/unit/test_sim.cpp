#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "spinsim/report.hpp"
#include "spinsim/sim.hpp"

using namespace spinsim;

namespace {

SystemState tumbling_servicer(const SystemModel& m) {
  SystemState s = initial_state(m, Phase::B);
  s.w_b = Vec3(0.05, -0.03, 0.04);
  s.theta_dot << 0.05, -0.04, 0.03, 0.06, -0.02, 0.05;
  s.h_r = Vec3(0.4, -0.2, 0.3);
  return s;
}

Vec3 servicer_total(const SystemModel& m, const SystemState& s) {
  const MomentumLedger h = momentum_ledger(m, s);
  return h.h_servicer + h.h_wheels;
}

Eigen::VectorXd flatten(const SystemState& s) {
  Eigen::VectorXd x(4 + 3 + 6 + 6 + 3);
  x << s.q_b.coeffs(), s.w_b, s.theta, s.theta_dot, s.h_r;
  return x;
}

SystemState integrate(const SystemModel& m, Plant plant, SystemState s, double dt, double t_end,
                      const Controller& c = zero_control) {
  const long n = std::lround(t_end / dt);
  for (long k = 0; k < n; ++k) s = rk4_step(m, plant, s, dt, c);
  return s;
}

}  // namespace

TEST_CASE("integrator fixed point") {
  const SystemModel m = reference_model();
  SystemState s = initial_state(m, Phase::A);
  s.w_s.setZero();
  s.w_b.setZero();
  const SystemState next = rk4_step(m, Plant::FreeServicer, s, 0.01, zero_control);
  CHECK(next.q_b.coeffs() == s.q_b.coeffs());
  CHECK(next.q_s.coeffs() == s.q_s.coeffs());
  CHECK(next.theta == s.theta);
  CHECK(next.w_b.isZero(0.0));
  CHECK(next.theta_dot.isZero(0.0));
  CHECK(next.t == doctest::Approx(0.01));
}

TEST_CASE("free target spin conserves rate and momentum magnitude") {
  SystemModel m = reference_model();
  SystemState s = initial_state(m, Phase::A);
  s.w_s = Vec3(0.01, -0.02, 0.0265);
  const double w0 = s.w_s.norm();
  const double h0 = (m.target.inertia * s.w_s).norm();
  s = integrate(m, Plant::LockedServicer, s, 1e-2, 100.0);
  CHECK(std::abs(s.w_s.norm() - w0) / w0 < 1e-9);
  CHECK(std::abs((m.target.inertia * s.w_s).norm() - h0) / h0 < 1e-9);
}

TEST_CASE("unactuated servicer conserves inertial angular momentum") {
  const SystemModel m = reference_model();
  SystemState s = tumbling_servicer(m);
  const Vec3 h0 = servicer_total(m, s);
  for (int k = 0; k < 10000; ++k) {
    s = rk4_step(m, Plant::FreeServicer, s, 1e-3, zero_control);
  }
  CHECK((servicer_total(m, s) - h0).norm() / h0.norm() < 1e-8);
}

TEST_CASE("locked joints stay locked") {
  const SystemModel m = reference_model();
  SystemState s = tumbling_servicer(m);
  s.theta_dot.setZero();
  const JointVector theta = s.theta;
  s = integrate(m, Plant::LockedServicer, s, 1e-2, 5.0);
  CHECK(s.theta_dot.isZero(0.0));
  CHECK(s.theta == theta);
}

TEST_CASE("RK4 convergence order") {
  const SystemModel m = reference_model();
  const SystemState s0 = tumbling_servicer(m);
  const double t_end = 4.0;
  const Eigen::VectorXd ref = flatten(integrate(m, Plant::FreeServicer, s0, 1e-3, t_end));
  const double e1 = (flatten(integrate(m, Plant::FreeServicer, s0, 0.2, t_end)) - ref).norm();
  const double e2 = (flatten(integrate(m, Plant::FreeServicer, s0, 0.1, t_end)) - ref).norm();
  MESSAGE("error ratio " << e1 / e2);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("momentum ledger") {
  SystemModel m = reference_model();
  SystemState s = initial_state(m, Phase::A);
  s.w_s.setZero();
  s.w_b.setZero();
  const MomentumLedger zero = momentum_ledger(m, s);
  CHECK(zero.h_total.norm() == 0.0);
  CHECK(zero.h_servicer.norm() == 0.0);

  s = initial_state(reference_model(), Phase::A);
  CHECK(momentum_ledger(m, s).h_target.norm() == doctest::Approx(1.06).epsilon(1e-12));
}

TEST_CASE("joint tracking error decays at the slow closed-loop pole") {
  SystemModel m = reference_model();
  const GainsB g{1.0, 3.0, 2.0, 1.0};  // poles at -0.382 and -2.618
  const double slow = (3.0 - std::sqrt(5.0)) / 2.0;

  SystemState s = initial_state(m, Phase::B);
  const JointVector hold = s.theta;
  const JointTrajectory traj(hold, hold, 0.0);
  s.theta += JointVector::Constant(0.02);

  const Controller law = [&](const SystemState& x, const PlantTerms& terms) {
    const RelativeMotion rm = relative_motion(m, x);
    const CoordinationInput in{x.theta, x.theta_dot, rm.q_rel, rm.w_rel, rm.target_rate_in_base,
                               rm.target_accel_in_base};
    const CoordinationTorques t = phase_b_torques(in, traj, terms.rd, terms.set, g, x.t);
    ControlOutput u;
    u.tau_r = t.tau_r;
    u.tau_m = t.tau_m;
    return u;
  };
  const double dt = 0.01;
  std::vector<double> t_log, e_log;
  for (int k = 0; k <= 1200; ++k) {
    if (k >= 600 && k % 100 == 0) {
      t_log.push_back(s.t);
      e_log.push_back(std::log((s.theta - hold).norm()));
    }
    s = rk4_step(m, Plant::FreeServicer, s, dt, law);
  }
  // Least-squares slope of log error.
  const double n = static_cast<double>(t_log.size());
  double st = 0, se = 0, stt = 0, ste = 0;
  for (std::size_t i = 0; i < t_log.size(); ++i) {
    st += t_log[i];
    se += e_log[i];
    stt += t_log[i] * t_log[i];
    ste += t_log[i] * e_log[i];
  }
  const double slope = (n * ste - st * se) / (n * stt - st * st);
  CHECK(-slope == doctest::Approx(slow).epsilon(0.05));
}

TEST_CASE("already synchronized start fires after one dwell window") {
  SystemModel m = reference_model();
  m.initial.q_rel = Quaternion();
  m.initial.omega_b = m.initial.omega_s;
  m.sim.t_end = 10.0;
  const MissionResult r = run_mission(m);
  REQUIRE(r.events.t[1]);
  CHECK(*r.events.t[1] == doctest::Approx(m.sim.dwell).epsilon(1e-9));
}

TEST_CASE("zero-spin mission") {
  SystemModel m = reference_model();
  m.initial.omega_s.setZero();
  m.initial.q_rel = Quaternion();
  const MissionResult r = run_mission(m);
  CHECK(r.success);
  CHECK(r.events.ordered());
  CHECK(*r.events.t[1] == doctest::Approx(m.sim.dwell).epsilon(1e-9));
  // Nothing to detumble: done on the first detumbling step.
  CHECK(*r.events.t[4] - *r.events.t[3] <= 1.5 * m.sim.dt);
  CHECK(r.final_momentum.h_total.norm() < 1e-9);
  CHECK(r.stats.peak_tau_e < 1e-6);
}

TEST_CASE("phase-isolated detumbling conserves compound plus wheel momentum") {
  const SystemModel m = reference_model();
  RunOptions opt;
  opt.phase_only = Phase::C;
  Vec3 h0 = Vec3::Zero();
  double worst = 0.0;
  opt.observer = [&](const StepInfo& step) {
    const Vec3 h = momentum_ledger(m, step.after).h_total;
    if (h0.isZero(0.0)) h0 = momentum_ledger(m, step.before).h_total;
    worst = std::max(worst, (h - h0).norm() / h0.norm());
  };
  const MissionResult r = run_mission(m, opt);
  CHECK(r.success);
  CHECK(r.final_state.phase == Phase::Done);
  CHECK(worst < 1e-6);
  CHECK(transfer_ratio(r) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("identical configurations give bit-identical telemetry") {
  SystemModel m = reference_model();
  m.sim.t_end = 40.0;
  m.sim.telemetry_decimation = 10;
  std::ostringstream a, b;
  write_telemetry_csv(a, run_mission(m).telemetry);
  write_telemetry_csv(b, run_mission(m).telemetry);
  CHECK(a.str().size() > 1000);
  CHECK(a.str() == b.str());
}
