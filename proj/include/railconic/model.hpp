#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "railconic/conic.hpp"
#include "railconic/rolling_stock.hpp"
#include "railconic/route.hpp"
#include "railconic/solver.hpp"

namespace railconic {

/// How segment travel time is tied to the speed variables.
///  - Endpoint: alpha_i * v_i >= 1, with v_i the speed at the segment's far
///    end. Requires a positive terminal speed; the terminal boundary acts as
///    a lower bound on v_N.
///  - Trapezoidal: alpha_i * (v_{i-1} + v_i) >= 2, i.e. the reciprocal of
///    the segment's average speed. Admits v_N = 0; the terminal boundary is
///    pinned exactly.
enum class TimeModel { Endpoint, Trapezoidal };

const char* to_string(TimeModel mode);
TimeModel time_model_from_string(const std::string& name);

/// Column layout of the decision vector: the five per-segment families
/// [v | alpha | beta | force | energy], each of length n_segments.
/// v_0 and beta_0 = v_0^2 are fixed constants, not variables.
///
/// Speeds are in m/s, alpha in s/m, beta in m^2/s^2. Effort and energy
/// columns are expressed in MN and MJ (force_unit_N, energy_unit_J) so the
/// assembled program is well conditioned; physical values are
/// x[force(i)] * force_unit_N and x[energy(i)] * energy_unit_J.
struct VariableMap {
  int n_segments = 0;
  double force_unit_N = 1e6;
  double energy_unit_J = 1e6;

  int num_vars() const { return 5 * n_segments; }
  // All accessors take the segment/point index i in 1..N.
  int speed(int i) const { return i - 1; }
  int alpha(int i) const { return n_segments + i - 1; }
  int beta(int i) const { return 2 * n_segments + i - 1; }
  int force(int i) const { return 3 * n_segments + i - 1; }
  int energy(int i) const { return 4 * n_segments + i - 1; }
};

/// A linear expression sum(coef * x_col) + constant.
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  static AffineExpr variable(int col, double coef = 1.0) {
    AffineExpr e;
    e.terms.emplace_back(col, coef);
    return e;
  }
  static AffineExpr literal(double value) {
    AffineExpr e;
    e.constant = value;
    return e;
  }
};

/// Rows of a 3+k dimensional second-order cone encoding u*w >= c^2 with
/// u, w >= 0, via ||(2c, u - w)|| <= u + w. Row order: (u+w, 2c, u-w).
/// Throws when c is a nonpositive constant (the encoding needs c^2 > 0 to
/// force u, w onto the positive branch).
std::array<AffineExpr, 3> hyperbolic_cone_rows(const AffineExpr& u, const AffineExpr& w,
                                               const AffineExpr& c);

/// Builds the relaxed energy-minimal driving model as a conic program:
/// linear energy/time/effort/power rows plus per-segment hyperbolic cones
/// alpha against speed and beta against squared speed.
std::pair<ConicProgram, VariableMap> build_program(const RollingStock& stock,
                                                   const DiscretizedRoute& route,
                                                   double journey_time_s, TimeModel mode);

/// Physical speed profile recovered from a solved program.
struct Trajectory {
  std::vector<double> distance_m;      // size N+1, i * delta_d
  std::vector<double> speed_mps;       // size N+1, includes fixed v_0
  std::vector<double> alpha_s_per_m;   // size N
  std::vector<double> beta_m2_per_s2;  // size N (beta_0 = v_0^2 not stored)
  std::vector<double> force_N;         // size N
  std::vector<double> energy_J;        // size N
  double objective_kwh = 0.0;
  TimeModel mode = TimeModel::Endpoint;
  int iterations = 0;
  double relative_gap = 0.0;
  double wall_time_s = 0.0;

  int n_segments() const { return static_cast<int>(force_N.size()); }
};

/// Maps an Optimal solution back to a Trajectory. Throws on any other
/// solve status.
Trajectory extract_trajectory(const ConicSolution& solution, const VariableMap& map,
                              const DiscretizedRoute& route, TimeModel mode);

/// Smallest journey time expressible by the relaxed time constraint given
/// the speed limits (segment times at the limit speeds). Journey times at or
/// below this bound are rejected at build.
double min_journey_time_s(const DiscretizedRoute& route, TimeModel mode);

}  // namespace railconic
