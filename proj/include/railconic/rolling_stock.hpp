#pragma once

#include <string>

namespace railconic {

/// Vehicle parameters in SI units. File formats carry the customary
/// engineering units (t, kN, kW, kN/(km/h), kN/(km/h)^2); parsing converts.
struct RollingStock {
  double mass_kg = 0.0;
  double max_tractive_effort_N = 0.0;
  double max_braking_effort_N = 0.0;
  double max_traction_power_W = 0.0;
  double max_braking_power_W = 0.0;
  double eta_traction = 0.0;  // electrical -> mechanical, in (0, 1]
  double eta_braking = 0.0;   // mechanical -> electrical, in (0, 1]
  double davis_A_N = 0.0;
  double davis_B_N_per_mps = 0.0;
  double davis_C_N_per_mps2 = 0.0;

  /// Throws ValidationError unless all fields are positive, both
  /// efficiencies lie in (0, 1] and eta_traction * eta_braking < 1.
  void validate() const;
};

/// Parses a rolling stock JSON document (engineering units) into SI.
RollingStock parse_rolling_stock(const std::string& json_text);

/// Serializes back to the JSON file format, inverting the unit conversion.
std::string rolling_stock_to_json(const RollingStock& stock);

/// Running resistance A + B*v + C*v^2 in newtons. v must be >= 0 m/s.
double davis_resistance(const RollingStock& stock, double v_mps);

}  // namespace railconic
