#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "spinsim/error.hpp"
#include "spinsim/report.hpp"

namespace py = pybind11;
using namespace spinsim;

namespace {

Quaternion to_quat(const Vec4& c) { return Quaternion::from_coeffs(c); }

std::optional<Phase> parse_phase(const std::optional<std::string>& p) {
  if (!p) return std::nullopt;
  if (*p == "A") return Phase::A;
  if (*p == "B") return Phase::B;
  if (*p == "C") return Phase::C;
  throw py::value_error("phase must be 'A', 'B' or 'C'");
}

// Telemetry as one float column per CSV field (phase as 0..3).
py::dict telemetry_columns(const std::vector<TelemetryRecord>& tel) {
  std::vector<std::string> names;
  {
    std::stringstream header(kTelemetryHeader);
    std::string name;
    while (std::getline(header, name, ',')) names.push_back(name);
  }
  const py::ssize_t n = static_cast<py::ssize_t>(tel.size());
  std::vector<py::array_t<double>> cols;
  for (std::size_t i = 0; i < names.size(); ++i) cols.emplace_back(n);
  for (py::ssize_t r = 0; r < n; ++r) {
    const TelemetryRecord& t = tel[r];
    const double row[] = {t.t,          t.w_rel.x(),  t.w_rel.y(),  t.w_rel.z(),  t.q_rel.vec().x(),
                          t.q_rel.vec().y(), t.q_rel.vec().z(), t.q_rel.scalar(), t.r_rel.x(), t.r_rel.y(),
                          t.r_rel.z(),  t.tau_r.x(),  t.tau_r.y(),  t.tau_r.z(),  t.tau_e.x(),
                          t.tau_e.y(),  t.tau_e.z(),  t.h_target,   t.h_servicer, t.h_wheels,
                          t.lyapunov,   t.sigma,      static_cast<double>(t.phase)};
    for (std::size_t c = 0; c < names.size(); ++c) cols[c].mutable_at(r) = row[c];
  }
  py::dict out;
  for (std::size_t c = 0; c < names.size(); ++c) out[py::str(names[c])] = cols[c];
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spinning-target capture and detumbling simulator";

  auto base_error = py::register_exception<Error>(m, "SpinsimError");
  py::register_exception<ValidationError>(m, "ValidationError", base_error.ptr());
  py::register_exception<NoSolutionError>(m, "NoSolutionError", base_error.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base_error.ptr());

  py::enum_<Phase>(m, "Phase")
      .value("A", Phase::A)
      .value("B", Phase::B)
      .value("C", Phase::C)
      .value("Done", Phase::Done);

  py::class_<SystemModel>(m, "SystemModel")
      .def_property_readonly("servicer_mass", &SystemModel::servicer_mass)
      .def_property_readonly("target_mass", [](const SystemModel& s) { return s.target.mass; })
      .def_property_readonly("target_inertia", [](const SystemModel& s) { return s.target.inertia; })
      .def_property_readonly("base_inertia", [](const SystemModel& s) { return s.base.inertia; })
      .def_property_readonly("theta_i", [](const SystemModel& s) { return s.initial.theta_i; })
      .def_property(
          "dt", [](const SystemModel& s) { return s.sim.dt; }, [](SystemModel& s, double v) { s.sim.dt = v; })
      .def_property(
          "duration", [](const SystemModel& s) { return s.sim.t_end; },
          [](SystemModel& s, double v) { s.sim.t_end = v; })
      .def_property(
          "tau_r_max", [](const SystemModel& s) { return s.limits.tau_r_max; },
          [](SystemModel& s, double v) { s.limits.tau_r_max = v; })
      .def_property(
          "tau_e_max", [](const SystemModel& s) { return s.limits.tau_e_max; },
          [](SystemModel& s, double v) { s.limits.tau_e_max = v; })
      .def("validate", [](const SystemModel& s) { validate(s); });

  m.def("reference_model", &reference_model);
  m.def("load_config", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("text"));

  m.def("quat_to_rotmat", [](const Vec4& q) { return quat_to_rotmat(to_quat(q)); }, py::arg("q"),
        "Rotation matrix of a scalar-last unit quaternion.");
  m.def("quat_error", [](const Vec4& target, const Vec4& base) {
    return quat_error(to_quat(target), to_quat(base)).coeffs();
  });

  m.def(
      "forward_kinematics",
      [](const SystemModel& s, const JointVector& theta) {
        const ForwardKinematics fk = forward_kinematics(s, theta);
        return py::make_tuple(fk.r, fk.eta.coeffs());
      },
      py::arg("model"), py::arg("theta"), "End-effector position and attitude in the base frame.");
  m.def("base_com_offset", py::overload_cast<const SystemModel&, const JointVector&>(&base_com_offset));
  m.def("com_jacobian", &com_jacobian);
  m.def("solve_final_joints",
        [](const SystemModel& s, const Vec3& rho, const Vec3& varrho, const Vec4& eta_f, const JointVector& seed) {
          return solve_final_joints(s, rho, varrho, to_quat(eta_f), seed);
        });
  m.def(
      "compound_inertia",
      [](const SystemModel& s, const JointVector& theta) { return compound(s, theta, Vec3::Zero()).M_t; },
      py::arg("model"), py::arg("theta"));
  m.def(
      "plan_capture_trajectory",
      [](const JointVector& a, const JointVector& b, double qd_max, double qdd_max) {
        return plan_capture_trajectory(a, b, qd_max, qdd_max).t_f();
      },
      py::arg("theta_i"), py::arg("theta_f"), py::arg("qd_max"), py::arg("qdd_max"),
      "Duration of the minimum-time rest-to-rest cubic.");

  py::class_<MissionResult>(m, "MissionResult")
      .def_readonly("success", &MissionResult::success)
      .def_readonly("failure", &MissionResult::failure)
      .def_readonly("theta_f", &MissionResult::theta_f)
      .def_readonly("t_f", &MissionResult::t_f)
      .def_property_readonly("events",
                             [](const MissionResult& r) {
                               py::dict ev;
                               for (std::size_t i = 0; i < r.events.t.size(); ++i) {
                                 if (r.events.t[i]) ev[MissionEvents::kNames[i]] = *r.events.t[i];
                               }
                               return ev;
                             })
      .def_property_readonly("transfer_ratio", &transfer_ratio)
      .def_property_readonly("peak_tau_r", [](const MissionResult& r) { return r.stats.peak_tau_r; })
      .def_property_readonly("peak_tau_e", [](const MissionResult& r) { return r.stats.peak_tau_e; })
      .def_property_readonly("constraint_violations",
                             [](const MissionResult& r) { return r.stats.constraint_violations; })
      .def_property_readonly("telemetry", [](const MissionResult& r) { return telemetry_columns(r.telemetry); });

  m.def(
      "run_mission",
      [](const SystemModel& s, std::optional<std::string> phase) {
        RunOptions opt;
        opt.phase_only = parse_phase(phase);
        py::gil_scoped_release release;
        return run_mission(s, opt);
      },
      py::arg("model"), py::arg("phase") = py::none());
  m.def("summary", &emit_summary, py::arg("model"), py::arg("result"));
  m.def("write_outputs", &write_outputs, py::arg("directory"), py::arg("model"), py::arg("result"),
        py::arg("plots") = false);
}
