#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spinsim/error.hpp"
#include "spinsim/model.hpp"

namespace spinsim {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& at(const std::string& key) const {
    if (!node_.contains(key)) throw ValidationError(field(key), "missing required field");
    return node_.at(key);
  }

  Reader child(const std::string& key) const {
    const json& c = at(key);
    if (!c.is_object()) throw ValidationError(field(key), "expected an object");
    return {c, field(key)};
  }

  double number(const std::string& key) const { return as_number(at(key), field(key)); }

  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ValidationError(field(key), "expected true or false");
    return v.get<bool>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector(const std::string& key) const {
    return as_vector<N>(at(key), field(key));
  }

  Mat3 matrix(const std::string& key) const {
    const json& v = at(key);
    const std::string f = field(key);
    if (!v.is_array() || v.size() != 3) throw ValidationError(f, "expected a 3x3 array");
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
      m.row(i) = as_vector<3>(v[i], f + "[" + std::to_string(i) + "]").transpose();
    }
    return m;
  }

  Quaternion quaternion(const std::string& key) const {
    return Quaternion::from_coeffs(vector<4>(key));
  }

  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) throw ValidationError(f, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(f, "must be finite");
    return x;
  }

  template <int N>
  static Eigen::Matrix<double, N, 1> as_vector(const json& v, const std::string& f) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
      throw ValidationError(f, "expected an array of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out[i] = as_number(v[i], f + "[" + std::to_string(i) + "]");
    return out;
  }

 private:
  const json& node_;
  std::string path_;
};

Mat3 unit_rotation(const Quaternion& q, const std::string& f) {
  if (std::abs(q.norm() - 1.0) > 1e-9) throw ValidationError(f, "quaternion must have unit norm");
  return quat_to_rotmat(q);
}

BodyParams read_body(const Reader& r) {
  BodyParams b;
  b.mass = r.number("mass_kg");
  b.com = r.has("com_m") ? r.vector<3>("com_m") : Vec3::Zero();
  b.inertia = r.matrix("inertia_kgm2");
  b.allow_nonphysical_inertia = r.boolean("allow_nonphysical_inertia", false);
  return b;
}

Link read_link(const Reader& r) {
  Link link;
  link.name = r.has("name") && r.at("name").is_string() ? r.at("name").get<std::string>() : std::string();
  link.length = r.number("length_m");
  link.body = read_body(r);
  if (!r.has("com_m")) link.body.com = Vec3(0.5 * link.length, 0.0, 0.0);
  link.joint.origin = r.vector<3>("origin_m");
  if (r.has("rotation_q")) {
    const Quaternion q = r.quaternion("rotation_q");
    link.joint.rotation = unit_rotation(q, r.field("rotation_q"));
  }
  link.joint.axis = r.vector<3>("axis");
  return link;
}

}  // namespace

SystemModel parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("<document>", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("<document>", "expected a JSON object");
  const Reader root(doc, "");

  SystemModel model;
  model.base = read_body(root.child("base"));

  const json& links = root.at("links");
  if (!links.is_array() || links.size() != static_cast<std::size_t>(kNumJoints)) {
    throw ValidationError("links", "expected an array of " + std::to_string(kNumJoints) + " links");
  }
  for (int i = 0; i < kNumJoints; ++i) {
    const std::string f = "links[" + std::to_string(i) + "]";
    if (!links[i].is_object()) throw ValidationError(f, "expected an object");
    model.arm.links[i] = read_link(Reader(links[i], f));
  }

  if (root.has("wheels")) {
    const Reader w = root.child("wheels");
    // Each row is one wheel spin axis.
    if (w.has("axes")) model.wheels.axes = w.matrix("axes").transpose();
    model.wheels.inertia = w.number("inertia_kgm2", model.wheels.inertia);
  }

  {
    const Reader t = root.child("target");
    model.target.mass = t.number("mass_kg");
    model.target.inertia = t.matrix("inertia_kgm2");
    model.target.grasp_offset = t.vector<3>("grasp_offset_m");
    if (t.has("grasp_attitude_q")) model.target.grasp_attitude = t.quaternion("grasp_attitude_q");
  }

  {
    const Reader l = root.child("limits");
    model.limits.qd_max = l.number("qd_max_rad_s");
    model.limits.qdd_max = l.number("qdd_max_rad_s2");
    model.limits.tau_r_max = l.number("tau_r_max_Nm");
    model.limits.tau_e_max = l.number("tau_e_max_Nm");
    model.arm.qd_max = model.limits.qd_max;
    model.arm.qdd_max = model.limits.qdd_max;
  }

  {
    const Reader ic = root.child("initial");
    model.initial.omega_s = ic.vector<3>("omega_s_rad_s");
    model.initial.q_rel = ic.quaternion("q_rel");
    model.initial.theta_i = ic.vector<kNumJoints>("theta_i_rad");
    model.initial.rho = ic.vector<3>("rho_m");
    if (ic.has("omega_b_rad_s")) model.initial.omega_b = ic.vector<3>("omega_b_rad_s");
    if (ic.has("h_r_Nms")) model.initial.h_r = ic.vector<3>("h_r_Nms");
  }

  model.gains = Gains::from_bandwidth(1.8);
  if (root.has("gains")) {
    const Reader g = root.child("gains");
    if (g.has("bandwidth_rad_s")) model.gains = Gains::from_bandwidth(g.number("bandwidth_rad_s"));
    model.gains.kp = g.number("kp", model.gains.kp);
    model.gains.kd = g.number("kd", model.gains.kd);
    model.gains.joint_kp = g.number("joint_kp", model.gains.joint_kp);
    model.gains.joint_kd = g.number("joint_kd", model.gains.joint_kd);
    model.gains.kw = g.number("kw", model.gains.kw);
    model.gains.kq = g.number("kq", model.gains.kq);
  }

  if (root.has("sim")) {
    const Reader s = root.child("sim");
    SimSettings& cfg = model.sim;
    cfg.dt = s.number("dt_s", cfg.dt);
    cfg.t_end = s.number("t_end_s", cfg.t_end);
    if (s.has("telemetry_decimation")) {
      const json& v = s.at("telemetry_decimation");
      if (!v.is_number_integer()) throw ValidationError(s.field("telemetry_decimation"), "expected an integer");
      cfg.telemetry_decimation = v.get<int>();
    }
    cfg.omega_tol = s.number("omega_tol_rad_s", cfg.omega_tol);
    cfg.q_tol = s.number("q_tol", cfg.q_tol);
    cfg.dwell = s.number("dwell_s", cfg.dwell);
    cfg.settle = s.number("settle_s", cfg.settle);
    cfg.eps_h = s.number("eps_h_Nms", cfg.eps_h);
    cfg.phase_a_timeout = s.number("phase_a_timeout_s", cfg.phase_a_timeout);
    cfg.appendix_literal = s.boolean("appendix_literal", cfg.appendix_literal);
  }

  validate(model);
  return model;
}

SystemModel load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace spinsim
