#include "spinsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinsim/error.hpp"

namespace spinsim {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::A: return "A";
    case Phase::B: return "B";
    case Phase::C: return "C";
    case Phase::Done: return "Done";
  }
  return "?";
}

bool MissionEvents::ordered() const {
  std::optional<double> last;
  for (const auto& e : t) {
    if (!e) continue;
    if (last && *e < *last) return false;
    last = e;
  }
  return true;
}

PlantTerms evaluate_plant(const SystemModel& model, Plant plant, const SystemState& s) {
  const JointVector rate = plant == Plant::FreeServicer ? s.theta_dot : JointVector::Zero();
  PlantTerms terms{assemble(model, s.theta, s.w_b, rate, s.h_r), {}, std::nullopt};
  terms.rd = reduce(terms.set);
  if (plant == Plant::Compound) {
    terms.cd = compound(model, s.theta, s.w_b, s.h_r);
  }
  return terms;
}

namespace {

bool finite(const StateDerivative& d) {
  return d.q_b_dot.allFinite() && d.w_b_dot.allFinite() && d.q_s_dot.allFinite() && d.w_s_dot.allFinite() &&
         d.theta_dot.allFinite() && d.theta_ddot.allFinite() && d.h_r_dot.allFinite();
}

SystemState advance(const SystemState& s, const StateDerivative& d, double h) {
  SystemState out = s;
  out.q_b = Quaternion::from_coeffs(s.q_b.coeffs() + h * d.q_b_dot);
  out.w_b = s.w_b + h * d.w_b_dot;
  out.q_s = Quaternion::from_coeffs(s.q_s.coeffs() + h * d.q_s_dot);
  out.w_s = s.w_s + h * d.w_s_dot;
  out.theta = s.theta + h * d.theta_dot;
  out.theta_dot = s.theta_dot + h * d.theta_ddot;
  out.h_r = s.h_r + h * d.h_r_dot;
  out.t = s.t + h;
  return out;
}

}  // namespace

StateDerivative state_derivative(const SystemModel& model, Plant plant, const SystemState& s,
                                 const Controller& controller, ControlOutput* control) {
  const PlantTerms terms = evaluate_plant(model, plant, s);
  const ControlOutput u = controller(s, terms);
  if (control) *control = u;

  StateDerivative d;
  d.h_r_dot = u.tau_r;
  switch (plant) {
    case Plant::LockedServicer: {
      const Eigen::LLT<Mat3> llt(terms.rd.M_b);
      if (llt.info() != Eigen::Success) throw NumericalError("base inertia is not positive definite");
      d.w_b_dot = llt.solve(terms.rd.B * u.tau_r - terms.rd.c_b);
      break;
    }
    case Plant::FreeServicer: {
      const ReducedMatrix m = generalized_inertia(terms.set, terms.rd);
      ReducedVector rhs;
      rhs << terms.rd.B * u.tau_r - terms.rd.c_b, u.tau_m - terms.set.c_m;
      const Eigen::LLT<ReducedMatrix> llt(m);
      if (llt.info() != Eigen::Success) throw NumericalError("generalized inertia is not positive definite");
      const ReducedVector acc = llt.solve(rhs);
      d.w_b_dot = acc.head<3>();
      d.theta_dot = s.theta_dot;
      d.theta_ddot = acc.tail<kNumJoints>();
      break;
    }
    case Plant::Compound: {
      d.w_b_dot = compound_acceleration(*terms.cd, u.tau_r);
      break;
    }
  }
  d.q_b_dot = quat_derivative(s.q_b, s.w_b);
  if (plant == Plant::Compound) {
    d.q_s_dot = d.q_b_dot;
    d.w_s_dot = d.w_b_dot;
  } else {
    d.q_s_dot = quat_derivative(s.q_s, s.w_s);
    d.w_s_dot = target_euler_rate(model.target, s.w_s);
  }
  if (!finite(d)) throw NumericalError("non-finite state derivative at t = " + std::to_string(s.t));
  return d;
}

SystemState rk4_step(const SystemModel& model, Plant plant, const SystemState& s, double dt,
                     const Controller& controller, ControlOutput* control) {
  const StateDerivative k1 = state_derivative(model, plant, s, controller, control);
  const StateDerivative k2 = state_derivative(model, plant, advance(s, k1, 0.5 * dt), controller);
  const StateDerivative k3 = state_derivative(model, plant, advance(s, k2, 0.5 * dt), controller);
  const StateDerivative k4 = state_derivative(model, plant, advance(s, k3, dt), controller);

  StateDerivative sum;
  sum.q_b_dot = k1.q_b_dot + 2.0 * k2.q_b_dot + 2.0 * k3.q_b_dot + k4.q_b_dot;
  sum.w_b_dot = k1.w_b_dot + 2.0 * k2.w_b_dot + 2.0 * k3.w_b_dot + k4.w_b_dot;
  sum.q_s_dot = k1.q_s_dot + 2.0 * k2.q_s_dot + 2.0 * k3.q_s_dot + k4.q_s_dot;
  sum.w_s_dot = k1.w_s_dot + 2.0 * k2.w_s_dot + 2.0 * k3.w_s_dot + k4.w_s_dot;
  sum.theta_dot = k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot;
  sum.theta_ddot = k1.theta_ddot + 2.0 * k2.theta_ddot + 2.0 * k3.theta_ddot + k4.theta_ddot;
  sum.h_r_dot = k1.h_r_dot + 2.0 * k2.h_r_dot + 2.0 * k3.h_r_dot + k4.h_r_dot;

  SystemState out = advance(s, sum, dt / 6.0);
  out.q_b = out.q_b.normalized().canonical();
  out.q_s = out.q_s.normalized().canonical();
  if (plant != Plant::FreeServicer) out.theta_dot.setZero();
  if (plant == Plant::Compound) {
    out.q_s = out.q_b;
    out.w_s = out.w_b;
  }
  out.t = s.t + dt;
  return out;
}

ControlOutput zero_control(const SystemState&, const PlantTerms& terms) {
  ControlOutput u;
  if (terms.cd) u.tau_e = terms.cd->c_g;
  return u;
}

RelativeMotion relative_motion(const SystemModel& model, const SystemState& s) {
  RelativeMotion rm;
  // RK4 stage states carry quaternions that are off unit norm by O(dt^2).
  rm.q_rel = quat_error(s.q_s.normalized(), s.q_b.normalized());
  rm.target_to_base = quat_to_rotmat(rm.q_rel).transpose();
  rm.target_rate_in_base = rm.target_to_base * s.w_s;
  rm.w_rel = s.w_b - rm.target_rate_in_base;
  rm.target_accel_in_base = rm.target_to_base * target_euler_rate(model.target, s.w_s);
  return rm;
}

MomentumLedger momentum_ledger(const SystemModel& model, const SystemState& s) {
  MomentumLedger h;
  const Mat3 r_b = quat_to_rotmat(s.q_b);
  if (s.phase == Phase::C || s.phase == Phase::Done) {
    const CompoundDynamics cd = compound(model, s.theta, s.w_b, s.h_r);
    const Vec3 target = model.target.inertia * s.w_b + cd.target_mass * cd.rho_s.cross(s.w_b.cross(cd.rho_s));
    h.h_target = r_b * target;
    h.h_servicer = r_b * (cd.M_t * s.w_b - target);
    h.h_wheels = r_b * (-cd.B * s.h_r);
  } else {
    const RobotInertiaSet set = assemble(model, s.theta, s.w_b, s.theta_dot, s.h_r);
    const ServicerMomentum m = servicer_momentum(set, reduce(set), {s.w_b, s.theta, s.theta_dot, s.h_r});
    h.h_servicer = r_b * m.body;
    h.h_wheels = r_b * m.wheels;
    h.h_target = quat_to_rotmat(s.q_s) * (model.target.inertia * s.w_s);
  }
  h.h_total = h.h_target + h.h_servicer + h.h_wheels;
  return h;
}

TelemetryRecord make_record(const SystemModel& model, const SystemState& s, const ControlOutput& control) {
  TelemetryRecord rec;
  rec.t = s.t;
  rec.phase = s.phase;
  rec.tau_r = control.tau_r;
  rec.tau_e = control.tau_e;
  rec.sigma = control.sigma;

  const RelativeMotion rm = relative_motion(model, s);
  rec.w_rel = rm.w_rel;
  rec.q_rel = rm.q_rel;

  const RobotInertiaSet set = assemble(model, s.theta, s.w_b, s.theta_dot, s.h_r);
  const ForwardKinematics fk = forward_kinematics(model, s.theta);
  const Mat3 base_to_inertial = quat_to_rotmat(s.q_b);
  const Vec3 grapple = base_to_inertial.transpose() * model.initial.rho +
                       rm.target_to_base * model.target.grasp_offset;
  rec.r_rel = grapple - set.ee_position;
  rec.eta_rel = (fk.eta.conjugate() * rm.q_rel.conjugate() * model.target.grasp_attitude).canonical();

  const bool rigid = s.phase == Phase::C || s.phase == Phase::Done;
  if (!rigid) {
    const Vec3 v_grapple = rm.target_to_base * s.w_s.cross(model.target.grasp_offset);
    const Vec6 ee_twist = set.J_b * s.w_b + set.J_m * s.theta_dot;
    rec.v_rel = v_grapple - ee_twist.head<3>();
    rec.w_rel_ee = rm.target_rate_in_base - ee_twist.tail<3>();
  } else {
    // Grapple is welded to the end-effector.
    rec.r_rel.setZero();
  }

  const MomentumLedger h = momentum_ledger(model, s);
  rec.h_target = h.h_target.norm();
  rec.h_servicer = h.h_servicer.norm();
  rec.h_wheels = h.h_wheels.norm();
  rec.h_total = h.h_total.norm();

  switch (s.phase) {
    case Phase::A: rec.lyapunov = attitude_lyapunov(rm.q_rel, rm.w_rel, model.gains.kp); break;
    case Phase::B: rec.lyapunov = attitude_lyapunov(rm.q_rel, rm.w_rel, model.gains.kq); break;
    case Phase::C:
    case Phase::Done: rec.lyapunov = (compound(model, s.theta, s.w_b, s.h_r).M_t * s.w_b).norm(); break;
  }
  return rec;
}

SystemState initial_state(const SystemModel& model, Phase start, JointVector* theta_f) {
  const InitialConditions& ic = model.initial;
  SystemState s;
  s.q_s = Quaternion::identity();
  s.w_s = ic.omega_s;
  s.theta = ic.theta_i;
  s.phase = start;

  switch (start) {
    case Phase::A:
      s.q_b = (s.q_s * ic.q_rel).normalized().canonical();
      s.w_b = ic.omega_b;
      s.h_r = ic.h_r;
      break;
    case Phase::B: {
      // Synchronized: base aligned with and spinning like the target, wheels
      // cancelling the servicer momentum.
      s.q_b = s.q_s;
      s.w_b = s.w_s;
      const RobotInertiaSet set = assemble(model, s.theta, s.w_b, JointVector::Zero());
      const ReducedDynamics rd = reduce(set);
      s.h_r = rd.B_inverse() * (rd.M_b * s.w_b);
      break;
    }
    case Phase::C:
    case Phase::Done: {
      s.theta = solve_final_joints(model, ic.rho, model.target.grasp_offset, model.target.grasp_attitude,
                                   ic.theta_i);
      if (theta_f) *theta_f = s.theta;
      s.q_b = s.q_s;
      s.w_b = s.w_s;
      const RobotInertiaSet set = assemble(model, s.theta, s.w_b, JointVector::Zero());
      const ReducedDynamics rd = reduce(set);
      s.h_r = rd.B_inverse() * (rd.M_b * s.w_b);
      s.phase = Phase::C;
      break;
    }
  }
  return s;
}

namespace {

enum EventIndex { kSynch = 0, kCaptureStart, kCaptureEnd, kDetumbleStart, kDetumbleEnd };

class Mission {
 public:
  Mission(const SystemModel& model, const RunOptions& options) : model_(model), options_(options) {}

  MissionResult run();

 private:
  ControlOutput control(const SystemState& s, const PlantTerms& terms) const;
  Plant plant_for(Phase p) const;
  void enter_capture(const SystemState& s);
  void rigidize(SystemState& s);
  bool after_step(SystemState& s);
  void record_stats(const SystemState& s, const ControlOutput& u);
  void record_capture(const SystemState& s);

  const SystemModel& model_;
  const RunOptions& options_;
  MissionResult result_;

  JointTrajectory trajectory_;
  double capture_start_ = 0.0;
  bool detumbling_ = false;
  double sigma_cap_ = std::numeric_limits<double>::infinity();
  long dwell_steps_ = 0;
};

Plant Mission::plant_for(Phase p) const {
  switch (p) {
    case Phase::A: return Plant::LockedServicer;
    case Phase::B: return Plant::FreeServicer;
    default: return Plant::Compound;
  }
}

ControlOutput Mission::control(const SystemState& s, const PlantTerms& terms) const {
  ControlOutput u;
  switch (s.phase) {
    case Phase::A: {
      const RelativeMotion rm = relative_motion(model_, s);
      u.tau_r = phase_a_torque(rm.q_rel, rm.w_rel, terms.rd, {model_.gains.kp, model_.gains.kd},
                               rm.target_accel_in_base);
      break;
    }
    case Phase::B: {
      const RelativeMotion rm = relative_motion(model_, s);
      const CoordinationInput in{s.theta, s.theta_dot, rm.q_rel, rm.w_rel, rm.target_rate_in_base,
                                 rm.target_accel_in_base};
      const GainsB g{model_.gains.joint_kp, model_.gains.joint_kd, model_.gains.kw, model_.gains.kq};
      const CoordinationTorques t = phase_b_torques(in, trajectory_, terms.rd, terms.set, g, s.t - capture_start_);
      u.tau_r = t.tau_r;
      u.tau_m = t.tau_m;
      break;
    }
    case Phase::C:
    case Phase::Done: {
      const CompoundDynamics& cd = *terms.cd;
      if (detumbling_ && s.phase == Phase::C) {
        const TorqueLimits lim{model_.limits.tau_r_max, model_.limits.tau_e_max};
        const SigmaResult sr = phase_c_sigma(cd, s.w_b, lim, model_.sim.eps_h, model_.sim.appendix_literal);
        if (sr.status == SigmaResult::Status::Active) {
          u.sigma = std::min(sr.sigma, sigma_cap_);
          u.tau_r = phase_c_torque(cd, s.w_b, u.sigma, model_.sim.eps_h);
        }
      }
      u.tau_e = torque_transmission(cd, u.tau_r);
      break;
    }
  }
  return u;
}

void Mission::enter_capture(const SystemState& s) {
  result_.theta_f = solve_final_joints(model_, model_.initial.rho, model_.target.grasp_offset,
                                       model_.target.grasp_attitude, s.theta);
  const JointTrajectory fastest =
      plan_capture_trajectory(s.theta, result_.theta_f, model_.limits.qd_max, model_.limits.qdd_max);
  // Land t_f on a step boundary: the reference acceleration jumps there, and
  // an RK4 step straddling the jump leaves a residual joint rate at capture.
  const double dt = model_.sim.dt;
  trajectory_ = JointTrajectory(s.theta, result_.theta_f, std::ceil(fastest.t_f() / dt - 1e-9) * dt);
  result_.t_f = trajectory_.t_f();
  capture_start_ = s.t;
}

void Mission::rigidize(SystemState& s) {
  s.theta_dot.setZero();
  s.q_s = s.q_b;
  s.w_s = s.w_b;
  s.phase = Phase::C;
  detumbling_ = false;
}

void Mission::record_stats(const SystemState& s, const ControlOutput& u) {
  MissionStats& st = result_.stats;
  ++st.steps;
  st.peak_tau_r = std::max(st.peak_tau_r, u.tau_r.norm());
  if (s.phase != Phase::C) return;
  st.peak_tau_e = std::max(st.peak_tau_e, u.tau_e.norm());
  if (!detumbling_ || u.sigma <= 0.0) return;
  const double tol = 1e-9;
  if (u.tau_r.norm() > model_.limits.tau_r_max + tol || u.tau_e.norm() > model_.limits.tau_e_max + tol) {
    ++st.constraint_violations;
  }
  const bool first = st.sigma_max == 0.0;
  st.sigma_min = first ? u.sigma : std::min(st.sigma_min, u.sigma);
  st.sigma_max = std::max(st.sigma_max, u.sigma);
}

// Relative end-effector/grapple error just before the grasp closes.
void Mission::record_capture(const SystemState& s) {
  const TelemetryRecord rec = make_record(model_, s, {});
  MissionStats& st = result_.stats;
  st.capture_pose_error = rec.r_rel.norm();
  st.capture_attitude_error = rec.eta_rel.vec().norm();
  st.capture_velocity_error = rec.v_rel.norm();
  st.capture_rate_error = rec.w_rel_ee.norm();
}

// Returns false when the run should stop.
bool Mission::after_step(SystemState& s) {
  auto& ev = result_.events.t;
  const SimSettings& cfg = model_.sim;
  switch (s.phase) {
    case Phase::A: {
      const RelativeMotion rm = relative_motion(model_, s);
      const bool within = rm.w_rel.norm() < cfg.omega_tol && rm.q_rel.vec().norm() < cfg.q_tol;
      dwell_steps_ = within ? dwell_steps_ + 1 : 0;
      if (static_cast<double>(dwell_steps_) * cfg.dt >= cfg.dwell - 0.5 * cfg.dt) {
        ev[kCaptureStart] = s.t;
        if (options_.phase_only == Phase::A) {
          result_.success = true;
          return false;
        }
        enter_capture(s);
        s.phase = Phase::B;
      } else if (s.t >= cfg.phase_a_timeout) {
        result_.failure = "spin synchronization did not converge within " + std::to_string(cfg.phase_a_timeout) + " s";
        return false;
      }
      return true;
    }
    case Phase::B:
      if (s.t - capture_start_ >= trajectory_.t_f() - 0.5 * cfg.dt) {
        ev[kCaptureEnd] = s.t;
        record_capture(s);
        if (options_.phase_only == Phase::B) {
          result_.success = true;
          return false;
        }
        rigidize(s);
      }
      return true;
    case Phase::C:
      if (!detumbling_) {
        if (s.t - *ev[kCaptureEnd] >= cfg.settle - 0.5 * cfg.dt) {
          ev[kDetumbleStart] = s.t;
          detumbling_ = true;
        }
        return true;
      }
      if ((compound(model_, s.theta, s.w_b, s.h_r).M_t * s.w_b).norm() <= cfg.eps_h) {
        ev[kDetumbleEnd] = s.t;
        s.phase = Phase::Done;
        result_.success = true;
        return false;
      }
      return true;
    case Phase::Done:
      return false;
  }
  return false;
}

MissionResult Mission::run() {
  const SimSettings& cfg = model_.sim;
  const Phase start = options_.phase_only.value_or(Phase::A);
  auto& ev = result_.events.t;
  SystemState s;
  try {
    s = initial_state(model_, start, &result_.theta_f);
  } catch (const NoSolutionError& e) {
    result_.failure = e.what();
    return result_;
  }
  switch (start) {
    case Phase::A: ev[kSynch] = 0.0; break;
    case Phase::B:
      ev[kCaptureStart] = 0.0;
      try {
        enter_capture(s);
      } catch (const NoSolutionError& e) {
        result_.failure = e.what();
        result_.final_state = s;
        return result_;
      }
      break;
    default:
      ev[kCaptureEnd] = 0.0;
      ev[kDetumbleStart] = 0.0;
      detumbling_ = true;
      break;
  }
  result_.initial_momentum = momentum_ledger(model_, s);

  const Controller controller = [this](const SystemState& st, const PlantTerms& terms) {
    return control(st, terms);
  };
  const long max_steps = static_cast<long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  const int decimation = std::max(cfg.telemetry_decimation, 1);

  try {
    bool running = true;
    for (long k = 0; running; ++k) {
      if (k >= max_steps) {
        result_.failure = "duration elapsed in phase " + std::string(phase_name(s.phase));
        break;
      }
      s.t = static_cast<double>(k) * cfg.dt;

      bool terminal = false;
      sigma_cap_ = std::numeric_limits<double>::infinity();
      if (s.phase == Phase::C && detumbling_) {
        const CompoundDynamics cd = compound(model_, s.theta, s.w_b, s.h_r);
        const TorqueLimits lim{model_.limits.tau_r_max, model_.limits.tau_e_max};
        const SigmaResult sr = phase_c_sigma(cd, s.w_b, lim, cfg.eps_h, cfg.appendix_literal);
        if (sr.status == SigmaResult::Status::Active && sr.coeffs.h - sr.sigma * cfg.dt <= cfg.eps_h) {
          sigma_cap_ = std::max((sr.coeffs.h - 0.5 * cfg.eps_h) / cfg.dt, 0.0);
          terminal = true;
        }
      }

      ControlOutput u;
      SystemState next = rk4_step(model_, plant_for(s.phase), s, cfg.dt, controller, &u);
      next.t = static_cast<double>(k + 1) * cfg.dt;
      if (k % decimation == 0) result_.telemetry.push_back(make_record(model_, s, u));
      record_stats(s, u);
      running = after_step(next);
      if (options_.observer) options_.observer({s, next, u, terminal});
      s = next;
    }
  } catch (const InfeasibleError& e) {
    result_.failure = std::string("detumbling infeasible (") + e.constraint() + "): " + e.what();
  } catch (const NoSolutionError& e) {
    result_.failure = e.what();
  } catch (const NumericalError& e) {
    result_.failure = e.what();
  }

  // Closing record at the final state.
  const PlantTerms terms = evaluate_plant(model_, plant_for(s.phase), s);
  ControlOutput u_final;
  if (s.phase != Phase::Done) {
    try {
      u_final = control(s, terms);
    } catch (const Error&) {
      u_final = zero_control(s, terms);
    }
  } else {
    u_final = zero_control(s, terms);
  }
  if (result_.telemetry.empty() || result_.telemetry.back().t < s.t) {
    result_.telemetry.push_back(make_record(model_, s, u_final));
  }
  result_.final_state = s;
  result_.final_momentum = momentum_ledger(model_, s);
  return result_;
}

}  // namespace

MissionResult run_mission(const SystemModel& model, const RunOptions& options) {
  validate(model);
  return Mission(model, options).run();
}

}  // namespace spinsim
