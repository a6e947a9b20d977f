#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "spinsim/sim.hpp"

namespace spinsim {

/// Column order of telemetry.csv.
inline constexpr const char* kTelemetryHeader =
    "t,wrel_x,wrel_y,wrel_z,q1,q2,q3,q0,rrel_x,rrel_y,rrel_z,taur_x,taur_y,taur_z,taue_x,taue_y,taue_z,"
    "h_target,h_servicer,h_wheels,V,sigma,phase";

/// %.17g, so that values round-trip exactly.
std::string format_double(double x);

void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRecord>& telemetry);
void write_events_csv(std::ostream& out, const MissionEvents& events);

/// Human-readable report: events, momenta, peak torques, constraint
/// violations, decay-rate range and the momentum transfer ratio.
std::string emit_summary(const SystemModel& model, const MissionResult& result);

/// ||h_wheels(final)|| / ||h_target(initial)||; NaN when the target starts at rest.
double transfer_ratio(const MissionResult& result);

/// Write telemetry.csv, events.csv, summary.txt and optionally the plots
/// into `dir`, creating it if needed.
void write_outputs(const std::filesystem::path& dir, const SystemModel& model, const MissionResult& result,
                   bool plots);

}  // namespace spinsim
