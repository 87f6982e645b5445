#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "framescope/flow.hpp"
#include "framescope/measure.hpp"
#include "framescope/potentials.hpp"
#include "framescope/transport.hpp"

namespace framescope {

using json = nlohmann::json;

/// %.17g; round-trips every double.
std::string format_double(double x);

// Measures: {"dim": d, "points": [[...], ...], "weights": [...]}
json measure_to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const json& j);
DiscreteMeasure read_measure(const std::string& path);
void write_measure(const std::string& path, const DiscreteMeasure& mu);

json report_to_json(const PotentialReport& report);

// Plans: dense JSON or sparse (i, j, mass) CSV of the nonzero entries.
json plan_to_json(const TransportPlan& plan);
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

/// FlowConfig <-> JSON with the struct's field names; absent keys keep their
/// defaults, unknown keys are rejected.
json config_to_json(const FlowConfig& config);
FlowConfig config_from_json(const json& j);
FlowConfig read_config(const std::string& path);

/// One row of the trajectory CSV.
struct TrajectoryRow {
  int step = 0;
  double t = 0.0;
  double tp = 0.0;
  double m2 = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double energy_integrand = 0.0;
  double w2_step = 0.0;
};

inline constexpr const char* kTrajectoryHeader =
    "step,t,tp,m2,lambda_min,lambda_max,energy_integrand,w2_step";

void write_trajectory_csv(std::ostream& out, const FlowTrajectory& trajectory);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

}  // namespace framescope
