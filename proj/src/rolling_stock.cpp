#include "railconic/rolling_stock.hpp"

#include <cmath>

#include "railconic/errors.hpp"
#include "json.hpp"

namespace railconic {

namespace {

constexpr double kKmhPerMps = 3.6;

double require_number(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw ValidationError(std::string("stock: missing field '") + key + "'");
  }
  if (!doc[key].is_number()) {
    throw ValidationError(std::string("stock: field '") + key + "' is not a number");
  }
  return doc[key].get<double>();
}

}  // namespace

void RollingStock::validate() const {
  const struct {
    const char* name;
    double value;
  } fields[] = {
      {"mass_kg", mass_kg},
      {"max_tractive_effort_N", max_tractive_effort_N},
      {"max_braking_effort_N", max_braking_effort_N},
      {"max_traction_power_W", max_traction_power_W},
      {"max_braking_power_W", max_braking_power_W},
      {"eta_traction", eta_traction},
      {"eta_braking", eta_braking},
      {"davis_A_N", davis_A_N},
      {"davis_B_N_per_mps", davis_B_N_per_mps},
      {"davis_C_N_per_mps2", davis_C_N_per_mps2},
  };
  for (const auto& f : fields) {
    if (!(f.value > 0.0) || !std::isfinite(f.value)) {
      throw ValidationError(std::string("stock: '") + f.name + "' must be positive");
    }
  }
  if (eta_traction > 1.0) throw ValidationError("stock: eta_traction must be in (0, 1]");
  if (eta_braking > 1.0) throw ValidationError("stock: eta_braking must be in (0, 1]");
  // eta_t * eta_b = 1 would make traction/regeneration cycles free of cost
  // and the energy objective unbounded.
  if (!(eta_traction * eta_braking < 1.0)) {
    throw ValidationError("stock: eta_traction * eta_braking must be < 1");
  }
}

RollingStock parse_rolling_stock(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("stock: invalid JSON: ") + e.what());
  }

  RollingStock s;
  s.mass_kg = require_number(doc, "mass_t") * 1000.0;
  s.max_tractive_effort_N = require_number(doc, "max_tractive_effort_kN") * 1000.0;
  s.max_braking_effort_N = require_number(doc, "max_braking_effort_kN") * 1000.0;
  s.max_traction_power_W = require_number(doc, "max_traction_power_kW") * 1000.0;
  s.max_braking_power_W = require_number(doc, "max_braking_power_kW") * 1000.0;
  s.eta_traction = require_number(doc, "eta_traction");
  s.eta_braking = require_number(doc, "eta_braking");
  s.davis_A_N = require_number(doc, "davis_A_kN") * 1000.0;
  s.davis_B_N_per_mps = require_number(doc, "davis_B_kN_per_kmh") * 1000.0 * kKmhPerMps;
  s.davis_C_N_per_mps2 =
      require_number(doc, "davis_C_kN_per_kmh2") * 1000.0 * kKmhPerMps * kKmhPerMps;
  s.validate();
  return s;
}

std::string rolling_stock_to_json(const RollingStock& stock) {
  nlohmann::json doc;
  doc["mass_t"] = stock.mass_kg / 1000.0;
  doc["max_tractive_effort_kN"] = stock.max_tractive_effort_N / 1000.0;
  doc["max_braking_effort_kN"] = stock.max_braking_effort_N / 1000.0;
  doc["max_traction_power_kW"] = stock.max_traction_power_W / 1000.0;
  doc["max_braking_power_kW"] = stock.max_braking_power_W / 1000.0;
  doc["eta_traction"] = stock.eta_traction;
  doc["eta_braking"] = stock.eta_braking;
  doc["davis_A_kN"] = stock.davis_A_N / 1000.0;
  doc["davis_B_kN_per_kmh"] = stock.davis_B_N_per_mps / (1000.0 * kKmhPerMps);
  doc["davis_C_kN_per_kmh2"] = stock.davis_C_N_per_mps2 / (1000.0 * kKmhPerMps * kKmhPerMps);
  return doc.dump(2);
}

double davis_resistance(const RollingStock& stock, double v_mps) {
  if (v_mps < 0.0 || !std::isfinite(v_mps)) {
    throw ValidationError("davis_resistance: speed must be >= 0");
  }
  return stock.davis_A_N + stock.davis_B_N_per_mps * v_mps +
         stock.davis_C_N_per_mps2 * v_mps * v_mps;
}

}  // namespace railconic
