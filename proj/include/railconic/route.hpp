#pragma once

#include <string>
#include <vector>

namespace railconic {

/// One piecewise-constant interval of a route attribute over [from_m, to_m).
struct GradientInterval {
  double from_m = 0.0;
  double to_m = 0.0;
  double permille = 0.0;  // elevation slope, dH/dd * 1000
};

struct SpeedLimitInterval {
  double from_m = 0.0;
  double to_m = 0.0;
  double limit_mps = 0.0;
};

/// Inter-station route: total length plus gradient and speed-limit profiles.
/// Both interval lists cover [0, D] exactly, sorted and non-overlapping.
struct RouteProfile {
  double total_distance_m = 0.0;
  std::vector<GradientInterval> gradients;
  std::vector<SpeedLimitInterval> speed_limits;

  void validate() const;

  /// Length-weighted mean gradient (permille) over [from_m, to_m].
  double mean_gradient_permille(double from_m, double to_m) const;
  /// Most restrictive speed limit (m/s) over [from_m, to_m].
  double min_limit_mps(double from_m, double to_m) const;
  /// Altitude gain (m) from 0 to d, integrating the gradient profile.
  double altitude_m(double d) const;
};

/// Parses a route JSON document; speed limits are given in km/h.
RouteProfile parse_route(const std::string& json_text);

/// Route split into n equal segments of length delta_d, with per-segment
/// altitude change and per-point speed limits. Point i sits at i*delta_d;
/// its limit is the more restrictive of the two adjacent segment limits.
struct DiscretizedRoute {
  int n_segments = 0;
  double segment_length_m = 0.0;
  std::vector<double> altitude_change_m;    // size n_segments, indexed i-1
  std::vector<double> point_speed_limit_mps;  // size n_segments + 1
  double start_speed_mps = 0.0;
  double end_speed_mps = 0.0;

  double total_distance_m() const { return n_segments * segment_length_m; }
  double gradient_permille(int segment) const {  // segment in 1..N
    return altitude_change_m[segment - 1] / segment_length_m * 1000.0;
  }
};

/// Discretizes a route into n >= 2 equal segments with boundary speeds
/// (v0, vN). Boundary speeds must not exceed the local limits.
DiscretizedRoute discretize(const RouteProfile& route, int n,
                            double start_speed_mps, double end_speed_mps);

}  // namespace railconic
