#pragma once

#include <string>
#include <utility>
#include <vector>

#include "railconic/model.hpp"
#include "railconic/rolling_stock.hpp"
#include "railconic/route.hpp"

namespace railconic {

/// How tightly the relaxed variables track their physical counterparts:
/// alpha against the reciprocal (pair-average) speed and beta against the
/// squared speed. Deviations are relative; values are fractions, not
/// percentages.
struct ExactnessReport {
  double max_alpha_dev_rel = 0.0;
  double max_beta_dev_rel = 0.0;
  int argmax_alpha_segment = 0;  // 1..N
  int argmax_beta_segment = 0;   // 1..N
  std::vector<double> alpha_dev_rel;  // size N
  std::vector<double> beta_dev_rel;   // size N
};

ExactnessReport check_exactness(const Trajectory& trajectory);

/// Independent recomputation of energy and running time for a speed profile,
/// stepping segment by segment with trapezoidal average speeds.
struct SimulationResult {
  double energy_J = 0.0;
  double energy_kwh = 0.0;
  double running_time_s = 0.0;
  std::vector<double> drag_J;        // e1 per segment
  std::vector<double> kinetic_J;     // e2
  std::vector<double> potential_J;   // e3
  std::vector<double> mechanical_J;  // e4 = e1 + e2 + e3
};

/// Speed profile as (distance m, speed m/s) points. The points must line up
/// with the discretized route's segment boundaries.
SimulationResult simulate(const std::vector<std::pair<double, double>>& speed_points,
                          const RollingStock& stock, const DiscretizedRoute& route);

/// Side-by-side comparison of the model objective against the recomputed
/// energy and of the target journey time against the recomputed time.
struct ConsistencyReport {
  double objective_kwh = 0.0;
  double simulated_kwh = 0.0;
  double energy_delta_kwh = 0.0;  // simulated - objective
  double target_time_s = 0.0;
  double simulated_time_s = 0.0;
  double time_delta_s = 0.0;  // simulated - target

  std::string to_string() const;
};

ConsistencyReport consistency_report(const Trajectory& trajectory, const SimulationResult& sim,
                                     double target_time_s);

}  // namespace railconic
