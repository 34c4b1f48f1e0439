#include "railconic/route.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "railconic/errors.hpp"
#include "json.hpp"

namespace railconic {

namespace {

constexpr double kCoverageTol = 1e-9;

// Checks that intervals are sorted, non-overlapping and cover [0, D] exactly.
template <typename Interval>
void check_coverage(const std::vector<Interval>& intervals, double total, const char* what) {
  if (intervals.empty()) {
    throw ValidationError(std::string("route: empty ") + what + " list");
  }
  double cursor = 0.0;
  for (const auto& iv : intervals) {
    if (!(iv.to_m > iv.from_m)) {
      throw ValidationError(std::string("route: ") + what + " interval has non-positive length");
    }
    if (iv.from_m > cursor + kCoverageTol) {
      throw ValidationError(std::string("route: gap in ") + what + " coverage at " +
                            std::to_string(cursor) + " m");
    }
    if (iv.from_m < cursor - kCoverageTol) {
      throw ValidationError(std::string("route: overlap in ") + what + " coverage at " +
                            std::to_string(iv.from_m) + " m");
    }
    cursor = iv.to_m;
  }
  if (std::abs(cursor - total) > kCoverageTol) {
    throw ValidationError(std::string("route: ") + what + " coverage ends at " +
                          std::to_string(cursor) + " m, expected " + std::to_string(total));
  }
}

double require_number(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw ValidationError(std::string("route: missing numeric field '") + key + "'");
  }
  return doc[key].get<double>();
}

}  // namespace

void RouteProfile::validate() const {
  if (!(total_distance_m > 0.0) || !std::isfinite(total_distance_m)) {
    throw ValidationError("route: total_distance_m must be positive");
  }
  check_coverage(gradients, total_distance_m, "gradient");
  check_coverage(speed_limits, total_distance_m, "speed limit");
  for (const auto& g : gradients) {
    if (std::abs(g.permille) >= 100.0) {
      throw ValidationError("route: |gradient| must be below 100 permille");
    }
  }
  for (const auto& l : speed_limits) {
    if (!(l.limit_mps > 0.0)) {
      throw ValidationError("route: speed limits must be positive");
    }
  }
}

double RouteProfile::mean_gradient_permille(double from_m, double to_m) const {
  double weighted = 0.0;
  for (const auto& g : gradients) {
    const double lo = std::max(from_m, g.from_m);
    const double hi = std::min(to_m, g.to_m);
    if (hi > lo) weighted += (hi - lo) * g.permille;
  }
  return weighted / (to_m - from_m);
}

double RouteProfile::min_limit_mps(double from_m, double to_m) const {
  double limit = std::numeric_limits<double>::infinity();
  for (const auto& l : speed_limits) {
    // Closed/open boundary handling: an interval matters if it overlaps the
    // query span with positive length.
    if (std::min(to_m, l.to_m) - std::max(from_m, l.from_m) > kCoverageTol) {
      limit = std::min(limit, l.limit_mps);
    }
  }
  return limit;
}

double RouteProfile::altitude_m(double d) const {
  double h = 0.0;
  for (const auto& g : gradients) {
    const double hi = std::min(d, g.to_m);
    if (hi > g.from_m) h += (hi - g.from_m) * g.permille / 1000.0;
  }
  return h;
}

RouteProfile parse_route(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("route: invalid JSON: ") + e.what());
  }

  RouteProfile r;
  r.total_distance_m = require_number(doc, "total_distance_m");
  if (!doc.contains("gradients") || !doc["gradients"].is_array()) {
    throw ValidationError("route: missing 'gradients' array");
  }
  if (!doc.contains("speed_limits") || !doc["speed_limits"].is_array()) {
    throw ValidationError("route: missing 'speed_limits' array");
  }
  for (const auto& item : doc["gradients"]) {
    GradientInterval g;
    g.from_m = require_number(item, "from_m");
    g.to_m = require_number(item, "to_m");
    g.permille = require_number(item, "permille");
    r.gradients.push_back(g);
  }
  for (const auto& item : doc["speed_limits"]) {
    SpeedLimitInterval l;
    l.from_m = require_number(item, "from_m");
    l.to_m = require_number(item, "to_m");
    l.limit_mps = require_number(item, "kmh") / 3.6;
    r.speed_limits.push_back(l);
  }
  r.validate();
  return r;
}

DiscretizedRoute discretize(const RouteProfile& route, int n, double start_speed_mps,
                            double end_speed_mps) {
  route.validate();
  if (n <= 1) throw ValidationError("discretize: need at least 2 segments");
  if (start_speed_mps < 0.0 || end_speed_mps < 0.0) {
    throw ValidationError("discretize: boundary speeds must be >= 0");
  }

  DiscretizedRoute d;
  d.n_segments = n;
  d.segment_length_m = route.total_distance_m / n;
  d.altitude_change_m.resize(n);
  d.point_speed_limit_mps.resize(n + 1);

  std::vector<double> segment_limit(n);
  for (int i = 1; i <= n; ++i) {
    const double lo = (i - 1) * d.segment_length_m;
    const double hi = i * d.segment_length_m;
    d.altitude_change_m[i - 1] =
        route.mean_gradient_permille(lo, hi) / 1000.0 * d.segment_length_m;
    segment_limit[i - 1] = route.min_limit_mps(lo, hi);
  }
  for (int i = 0; i <= n; ++i) {
    if (i == 0) {
      d.point_speed_limit_mps[i] = segment_limit[0];
    } else if (i == n) {
      d.point_speed_limit_mps[i] = segment_limit[n - 1];
    } else {
      d.point_speed_limit_mps[i] = std::min(segment_limit[i - 1], segment_limit[i]);
    }
  }

  if (start_speed_mps > d.point_speed_limit_mps.front()) {
    throw ValidationError("discretize: start speed exceeds the local speed limit");
  }
  if (end_speed_mps > d.point_speed_limit_mps.back()) {
    throw ValidationError("discretize: end speed exceeds the local speed limit");
  }
  d.start_speed_mps = start_speed_mps;
  d.end_speed_mps = end_speed_mps;
  return d;
}

}  // namespace railconic
