#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spinsim/sim.hpp"

namespace spinsim {

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

struct PlotPanel {
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Stacked time-history panels sharing the time axis, with dashed markers at
/// the mission events.  Returns a standalone SVG document.
std::string render_svg(const std::string& title, const std::vector<double>& t, const std::vector<PlotPanel>& panels,
                       const MissionEvents& events);

/// The five mission figures: relative rate/attitude, end-effector pose error,
/// end-effector velocity error, torques and momentum magnitudes.
void write_plots(const std::filesystem::path& dir, const SystemModel& model, const MissionResult& result);

/// File names written by write_plots, in order.
std::vector<std::string> plot_file_names();

}  // namespace spinsim
