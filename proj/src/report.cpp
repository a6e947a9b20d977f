#include "spinsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "spinsim/error.hpp"
#include "spinsim/plot.hpp"

namespace spinsim {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void put(std::ostream& out, double x) { out << ',' << format_double(x); }

void put(std::ostream& out, const Vec3& v) {
  for (int i = 0; i < 3; ++i) put(out, v[i]);
}

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string vec_text(const Vec3& v) {
  return "[" + fixed(v[0]) + ", " + fixed(v[1]) + ", " + fixed(v[2]) + "]";
}

}  // namespace

void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRecord>& telemetry) {
  out << kTelemetryHeader << '\n';
  for (const auto& r : telemetry) {
    out << format_double(r.t);
    put(out, r.w_rel);
    put(out, r.q_rel.vec());
    put(out, r.q_rel.scalar());
    put(out, r.r_rel);
    put(out, r.tau_r);
    put(out, r.tau_e);
    put(out, r.h_target);
    put(out, r.h_servicer);
    put(out, r.h_wheels);
    put(out, r.lyapunov);
    put(out, r.sigma);
    out << ',' << phase_name(r.phase) << '\n';
  }
}

void write_events_csv(std::ostream& out, const MissionEvents& events) {
  out << "event,name,t_s\n";
  for (std::size_t i = 0; i < events.t.size(); ++i) {
    if (!events.t[i]) continue;
    out << 't' << i << ',' << MissionEvents::kNames[i] << ',' << format_double(*events.t[i]) << '\n';
  }
}

double transfer_ratio(const MissionResult& result) {
  const double h0 = result.initial_momentum.h_target.norm();
  if (h0 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return result.final_momentum.h_wheels.norm() / h0;
}

std::string emit_summary(const SystemModel& model, const MissionResult& result) {
  std::ostringstream s;
  const MissionStats& st = result.stats;
  s << "status: " << (result.success ? "success" : "failure") << '\n';
  if (!result.failure.empty()) s << "failure: " << result.failure << '\n';
  s << "final phase: " << phase_name(result.final_state.phase) << '\n';
  s << "final time: " << fixed(result.final_state.t, 10) << " s\n";
  s << "steps: " << st.steps << " at dt = " << fixed(model.sim.dt) << " s\n\n";

  s << "events:\n";
  for (std::size_t i = 0; i < result.events.t.size(); ++i) {
    s << "  t" << i << "  " << MissionEvents::kNames[i] << ": ";
    if (result.events.t[i]) {
      s << fixed(*result.events.t[i], 10) << " s\n";
    } else {
      s << "not reached\n";
    }
  }
  s << "  capture trajectory duration: " << fixed(result.t_f, 10) << " s\n";
  s << "  capture joints [rad]:";
  for (int i = 0; i < kNumJoints; ++i) s << ' ' << fixed(result.theta_f[i], 10);
  s << "\n\n";

  const auto ledger = [&](const char* label, const MomentumLedger& h) {
    s << label << " momentum [N m s]:\n";
    s << "  target   " << fixed(h.h_target.norm(), 10) << "  " << vec_text(h.h_target) << '\n';
    s << "  servicer " << fixed(h.h_servicer.norm(), 10) << "  " << vec_text(h.h_servicer) << '\n';
    s << "  wheels   " << fixed(h.h_wheels.norm(), 10) << "  " << vec_text(h.h_wheels) << '\n';
    s << "  total    " << fixed(h.h_total.norm(), 10) << "  " << vec_text(h.h_total) << '\n';
  };
  ledger("initial", result.initial_momentum);
  ledger("final", result.final_momentum);
  const double ratio = transfer_ratio(result);
  s << "transfer ratio |h_wheels(final)| / |h_target(initial)|: "
    << (std::isnan(ratio) ? std::string("n/a (target at rest)") : fixed(ratio, 8)) << "\n\n";

  s << "capture errors at t2:\n";
  s << "  position " << fixed(st.capture_pose_error) << " m, attitude " << fixed(st.capture_attitude_error)
    << ", velocity " << fixed(st.capture_velocity_error) << " m/s, rate " << fixed(st.capture_rate_error)
    << " rad/s\n\n";

  s << "peak |tau_r|: " << fixed(st.peak_tau_r, 10) << " N m (limit " << fixed(model.limits.tau_r_max)
    << " applies while detumbling)\n";
  s << "peak |tau_e|: " << fixed(st.peak_tau_e, 10) << " N m (limit " << fixed(model.limits.tau_e_max) << ")\n";
  s << "constraint violations: " << st.constraint_violations << '\n';
  s << "decay rate sigma: min " << fixed(st.sigma_min, 10) << ", max " << fixed(st.sigma_max, 10) << " N m\n";
  s << "appendix-literal mode: " << (model.sim.appendix_literal ? "on" : "off") << '\n';
  return s.str();
}

void write_outputs(const std::filesystem::path& dir, const SystemModel& model, const MissionResult& result,
                   bool plots) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("telemetry.csv");
    write_telemetry_csv(f, result.telemetry);
  }
  {
    auto f = open("events.csv");
    write_events_csv(f, result.events);
  }
  {
    auto f = open("summary.txt");
    f << emit_summary(model, result);
  }
  if (plots) write_plots(dir, model, result);
}

}  // namespace spinsim
