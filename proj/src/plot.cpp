#include "spinsim/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <functional>
#include <sstream>

#include "spinsim/error.hpp"

namespace spinsim {

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 220.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kGap = 30.0;
constexpr double kBottom = 45.0;

constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(x) < 1e-300 ? 0.0 : x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.0 ? 2.0 : r < 7.0 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo;
  double hi;
  double step;
};

Range nice_range(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(std::abs(lo) * 0.1, 1e-12);
    lo -= pad;
    hi += pad;
  }
  const double step = nice_step(hi - lo, 5);
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

}  // namespace

std::string render_svg(const std::string& title, const std::vector<double>& t, const std::vector<PlotPanel>& panels,
                       const MissionEvents& events) {
  const double height = kTop + panels.size() * kPanelHeight + (panels.size() - 1) * kGap + kBottom;
  const double plot_w = kWidth - kLeft - kRight;
  const double t_lo = t.empty() ? 0.0 : t.front();
  const double t_hi = t.empty() ? 1.0 : std::max(t.back(), t_lo + 1e-9);
  const Range tx = nice_range(t_lo, t_hi);
  const auto px = [&](double x) { return kLeft + (x - tx.lo) / (tx.hi - tx.lo) * plot_w; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double top = kTop + p * (kPanelHeight + kGap);
    const double bottom = top + kPanelHeight;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : panel.series) {
      for (double y : s.y) {
        if (!std::isfinite(y)) continue;
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    const Range ry = nice_range(lo, hi);
    const auto py = [&](double y) { return bottom - (y - ry.lo) / (ry.hi - ry.lo) * kPanelHeight; };

    svg << "<g>\n";
    svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(kPanelHeight) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double y = ry.lo; y <= ry.hi + 0.5 * ry.step; y += ry.step) {
      svg << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + plot_w) << "\" y1=\"" << num(py(y))
          << "\" y2=\"" << num(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
      svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
          << tick_label(y) << "</text>\n";
    }
    for (double x = tx.lo; x <= tx.hi + 0.5 * tx.step; x += tx.step) {
      svg << "<line x1=\"" << num(px(x)) << "\" x2=\"" << num(px(x)) << "\" y1=\"" << num(bottom) << "\" y2=\""
          << num(bottom + 4) << "\" stroke=\"black\"/>\n";
      if (p + 1 == panels.size()) {
        svg << "<text x=\"" << num(px(x)) << "\" y=\"" << num(bottom + 16) << "\" text-anchor=\"middle\">"
            << tick_label(x) << "</text>\n";
      }
    }
    for (std::size_t e = 0; e < events.t.size(); ++e) {
      if (!events.t[e]) continue;
      const double x = px(*events.t[e]);
      svg << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\"" << num(top) << "\" y2=\"" << num(bottom)
          << "\" stroke=\"#888\" stroke-dasharray=\"4,3\"/>\n";
      if (p == 0) {
        svg << "<text x=\"" << num(x + 2) << "\" y=\"" << num(top - 4) << "\" fill=\"#555\">t" << e << "</text>\n";
      }
    }
    svg << "<text transform=\"translate(" << num(18) << ',' << num(top + kPanelHeight / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(panel.y_label) << "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const PlotSeries& s = panel.series[k];
      const char* color = kColors[k % kColors.size()];
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
      const std::size_t n = std::min(s.y.size(), t.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.y[i])) continue;
        svg << num(px(t[i])) << ',' << num(py(s.y[i])) << ' ';
      }
      svg << "\"/>\n";
      const double ly = top + 14 + 16 * k;
      svg << "<line x1=\"" << num(kLeft + plot_w + 12) << "\" x2=\"" << num(kLeft + plot_w + 32) << "\" y1=\""
          << num(ly - 4) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << num(kLeft + plot_w + 38) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
          << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(height - 8)
      << "\" text-anchor=\"middle\">time (s)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> plot_file_names() {
  return {"fig_relative_rate_attitude.svg", "fig_relative_pose.svg", "fig_relative_velocity.svg", "fig_torques.svg",
          "fig_momentum.svg"};
}

void write_plots(const std::filesystem::path& dir, const SystemModel&, const MissionResult& result) {
  const auto& tel = result.telemetry;
  std::vector<double> t;
  t.reserve(tel.size());
  for (const auto& r : tel) t.push_back(r.t);

  const auto column = [&](const std::function<double(const TelemetryRecord&)>& f) {
    std::vector<double> y;
    y.reserve(tel.size());
    for (const auto& r : tel) y.push_back(f(r));
    return y;
  };
  const auto xyz = [&](const std::string& name, const std::function<Vec3(const TelemetryRecord&)>& f) {
    std::vector<PlotSeries> out;
    const char* axes[] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) out.push_back({name + "_" + axes[i], column([&](const auto& r) { return f(r)[i]; })});
    return out;
  };

  std::vector<PlotPanel> quat_panel{{"q (quaternion)", xyz("q", [](const auto& r) { return r.q_rel.vec(); })}};
  quat_panel[0].series[0].label = "q1";
  quat_panel[0].series[1].label = "q2";
  quat_panel[0].series[2].label = "q3";
  quat_panel[0].series.push_back({"q0", column([](const auto& r) { return r.q_rel.scalar(); })});

  const std::vector<std::pair<std::string, std::vector<PlotPanel>>> figures{
      {"Relative angular velocity and attitude of the target w.r.t. the base",
       {{"w_rel (rad/s)", xyz("w_rel", [](const auto& r) { return r.w_rel; })}, quat_panel[0]}},
      {"Target pose w.r.t. the end-effector",
       {{"r_rel (m)", xyz("r_rel", [](const auto& r) { return r.r_rel; })},
        {"eta_rel (vector part)", xyz("eta", [](const auto& r) { return r.eta_rel.vec(); })}}},
      {"Target velocity w.r.t. the end-effector",
       {{"v_rel (m/s)", xyz("v", [](const auto& r) { return r.v_rel; })},
        {"w_rel,ee (rad/s)", xyz("w", [](const auto& r) { return r.w_rel_ee; })}}},
      {"Reaction-wheel and end-effector torques",
       {{"tau_r (N m)", xyz("tau_r", [](const auto& r) { return r.tau_r; })},
        {"tau_e (N m)", xyz("tau_e", [](const auto& r) { return r.tau_e; })}}},
      {"Angular momentum magnitudes",
       {{"|h| (N m s)",
         {{"target", column([](const auto& r) { return r.h_target; })},
          {"servicer", column([](const auto& r) { return r.h_servicer; })},
          {"wheels", column([](const auto& r) { return r.h_wheels; })}}}}},
  };

  const auto names = plot_file_names();
  for (std::size_t i = 0; i < figures.size(); ++i) {
    std::ofstream f(dir / names[i]);
    if (!f) throw Error("cannot write " + (dir / names[i]).string());
    f << render_svg(figures[i].first, t, figures[i].second, result.events);
  }
}

}  // namespace spinsim
