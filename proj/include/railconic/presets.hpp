#pragma once

#include "railconic/rolling_stock.hpp"
#include "railconic/route.hpp"

namespace railconic {

/// Metro-style demo vehicle (144 t, 230.81 kN effort, 2.52 MW, regenerative
/// braking). Used by the benchmark default instance and the examples.
RollingStock demo_stock();

/// Flat demo route: single gradient and speed-limit interval over the whole
/// distance.
RouteProfile flat_route(double total_distance_m, double limit_kmh);

/// JSON documents for the same data, in the file-format units.
std::string demo_stock_json();
std::string flat_route_json(double total_distance_m, double limit_kmh);

}  // namespace railconic
