#include "railconic/analysis.hpp"

#include <cmath>
#include <cstdio>

#include "railconic/errors.hpp"

namespace railconic {

namespace {
constexpr double kGravity = 9.81;
// Below this speed the squared-speed deviation switches from relative to
// absolute; the reference v_i^2 vanishes at a standstill terminal point.
constexpr double kRelativeFloor = 1e-9;
}  // namespace

ExactnessReport check_exactness(const Trajectory& trajectory) {
  const int n = trajectory.n_segments();
  if (n == 0) throw ValidationError("exactness: empty trajectory");

  ExactnessReport report;
  report.alpha_dev_rel.resize(n);
  report.beta_dev_rel.resize(n);

  for (int i = 1; i <= n; ++i) {
    const double v = trajectory.speed_mps[i];
    const double alpha = trajectory.alpha_s_per_m[i - 1];
    const double beta = trajectory.beta_m2_per_s2[i - 1];

    double alpha_ref;
    if (trajectory.mode == TimeModel::Endpoint) {
      if (!(v > 0.0)) throw ValidationError("exactness: zero speed at a compared index");
      alpha_ref = 1.0 / v;
    } else {
      const double pair = trajectory.speed_mps[i - 1] + v;
      if (!(pair > 0.0)) throw ValidationError("exactness: zero speed at a compared index");
      alpha_ref = 2.0 / pair;
    }
    report.alpha_dev_rel[i - 1] = std::abs(alpha - alpha_ref) / alpha_ref;

    const double beta_ref = v * v;
    report.beta_dev_rel[i - 1] = beta_ref > kRelativeFloor
                                     ? std::abs(beta - beta_ref) / beta_ref
                                     : std::abs(beta - beta_ref);
  }

  for (int i = 0; i < n; ++i) {
    if (report.alpha_dev_rel[i] >= report.max_alpha_dev_rel) {
      report.max_alpha_dev_rel = report.alpha_dev_rel[i];
      report.argmax_alpha_segment = i + 1;
    }
    if (report.beta_dev_rel[i] >= report.max_beta_dev_rel) {
      report.max_beta_dev_rel = report.beta_dev_rel[i];
      report.argmax_beta_segment = i + 1;
    }
  }
  return report;
}

SimulationResult simulate(const std::vector<std::pair<double, double>>& speed_points,
                          const RollingStock& stock, const DiscretizedRoute& route) {
  const int n = static_cast<int>(speed_points.size()) - 1;
  if (n < 1) throw ValidationError("simulate: need at least 2 speed points");
  if (n != route.n_segments) {
    throw ValidationError("simulate: speed points do not match the route segmentation");
  }
  const double grid_tol = 1e-6 * std::max(1.0, route.total_distance_m());
  for (int i = 0; i <= n; ++i) {
    if (std::abs(speed_points[i].first - i * route.segment_length_m) > grid_tol) {
      throw ValidationError("simulate: distances must sit on the segment boundaries");
    }
    if (speed_points[i].second < 0.0) {
      throw ValidationError("simulate: speeds must be >= 0");
    }
  }

  SimulationResult result;
  result.drag_J.resize(n);
  result.kinetic_J.resize(n);
  result.potential_J.resize(n);
  result.mechanical_J.resize(n);

  for (int i = 1; i <= n; ++i) {
    const double v_prev = speed_points[i - 1].second;
    const double v_here = speed_points[i].second;
    const double v_ave = 0.5 * (v_here + v_prev);
    if (!(v_ave > 0.0)) {
      throw ValidationError("simulate: zero average speed on a step, time is undefined");
    }
    const double dd = speed_points[i].first - speed_points[i - 1].first;
    result.running_time_s += dd / v_ave;

    const double e1 = davis_resistance(stock, v_ave) * dd;
    const double e2 = 0.5 * stock.mass_kg * (v_here * v_here - v_prev * v_prev);
    const double e3 = stock.mass_kg * kGravity * route.altitude_change_m[i - 1];
    const double e4 = e1 + e2 + e3;
    result.drag_J[i - 1] = e1;
    result.kinetic_J[i - 1] = e2;
    result.potential_J[i - 1] = e3;
    result.mechanical_J[i - 1] = e4;
    result.energy_J += e4 >= 0.0 ? e4 / stock.eta_traction : e4 * stock.eta_braking;
  }
  result.energy_kwh = result.energy_J / 3.6e6;
  return result;
}

ConsistencyReport consistency_report(const Trajectory& trajectory, const SimulationResult& sim,
                                     double target_time_s) {
  ConsistencyReport r;
  r.objective_kwh = trajectory.objective_kwh;
  r.simulated_kwh = sim.energy_kwh;
  r.energy_delta_kwh = sim.energy_kwh - trajectory.objective_kwh;
  r.target_time_s = target_time_s;
  r.simulated_time_s = sim.running_time_s;
  r.time_delta_s = sim.running_time_s - target_time_s;
  return r;
}

std::string ConsistencyReport::to_string() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "Objective function value (kWh)  %.3f\n"
                "Energy consumption (kWh)        %.3f (%+.3f)\n"
                "Target running time (s)         %.3f\n"
                "Actual running time (s)         %.3f (%+.3f)",
                objective_kwh, simulated_kwh, energy_delta_kwh, target_time_s, simulated_time_s,
                time_delta_s);
  return buf;
}

}  // namespace railconic
