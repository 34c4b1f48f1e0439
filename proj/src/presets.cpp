#include "railconic/presets.hpp"

#include "json.hpp"

namespace railconic {

std::string demo_stock_json() {
  nlohmann::json doc = {
      {"mass_t", 144.0},
      {"max_tractive_effort_kN", 230.81},
      {"max_braking_effort_kN", 230.81},
      {"max_traction_power_kW", 2520.0},
      {"max_braking_power_kW", 2520.0},
      {"eta_traction", 0.9},
      {"eta_braking", 0.6},
      {"davis_A_kN", 3.0016},
      {"davis_B_kN_per_kmh", 2.016e-2},
      {"davis_C_kN_per_kmh2", 6.9692e-4},
  };
  return doc.dump(2);
}

RollingStock demo_stock() { return parse_rolling_stock(demo_stock_json()); }

std::string flat_route_json(double total_distance_m, double limit_kmh) {
  nlohmann::json doc = {
      {"total_distance_m", total_distance_m},
      {"gradients",
       {{{"from_m", 0.0}, {"to_m", total_distance_m}, {"permille", 0.0}}}},
      {"speed_limits",
       {{{"from_m", 0.0}, {"to_m", total_distance_m}, {"kmh", limit_kmh}}}},
  };
  return doc.dump(2);
}

RouteProfile flat_route(double total_distance_m, double limit_kmh) {
  return parse_route(flat_route_json(total_distance_m, limit_kmh));
}

}  // namespace railconic
