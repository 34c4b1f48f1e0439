#include "railconic/model.hpp"

#include <cmath>
#include <numeric>

#include "railconic/errors.hpp"

namespace railconic {

namespace {

constexpr double kGravity = 9.81;  // m/s^2
// Open bound 0 < v_i, realized as a floor; interior-point iterates stay
// strictly inside anyway.
constexpr double kSpeedFloor = 1e-6;

class ProgramBuilder {
 public:
  explicit ProgramBuilder(int n_vars) : n_vars_(n_vars) {}

  void add_equality(const AffineExpr& lhs, double rhs) {
    for (const auto& [col, coef] : lhs.terms) {
      eq_triplets_.emplace_back(static_cast<int>(eq_rhs_.size()), col, coef);
    }
    eq_rhs_.push_back(rhs - lhs.constant);
  }

  // lhs <= rhs, appended to the leading orthant block.
  void add_upper_bound(const AffineExpr& lhs, double rhs) {
    add_row(lhs, rhs);
    ++orthant_rows_;
  }

  void add_cone(ConeKind kind, const AffineExpr* rows, int dim) {
    for (int r = 0; r < dim; ++r) {
      // Cone rows state slack = value of the expression, i.e. expr >= cone.
      add_row(rows[r], 0.0, /*negate=*/true);
    }
    cone_blocks_.push_back({kind, dim});
  }

  ConicProgram finalize(Eigen::VectorXd c) const {
    ConicProgram p;
    p.c = std::move(c);
    p.eq.resize(static_cast<Eigen::Index>(eq_rhs_.size()), n_vars_);
    p.eq.setFromTriplets(eq_triplets_.begin(), eq_triplets_.end());
    p.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), eq_rhs_.size());
    p.ineq.resize(static_cast<Eigen::Index>(ineq_rhs_.size()), n_vars_);
    p.ineq.setFromTriplets(ineq_triplets_.begin(), ineq_triplets_.end());
    p.ineq_rhs = Eigen::Map<const Eigen::VectorXd>(ineq_rhs_.data(), ineq_rhs_.size());
    if (orthant_rows_ > 0) {
      p.cones.push_back({ConeKind::NonnegativeOrthant, orthant_rows_});
    }
    p.cones.insert(p.cones.end(), cone_blocks_.begin(), cone_blocks_.end());
    p.validate();
    return p;
  }

 private:
  // Appends one inequality row. With negate, the row reads expr - s = 0, so
  // the slack equals the expression; otherwise lhs + s = rhs.
  void add_row(const AffineExpr& expr, double rhs, bool negate = false) {
    const double sign = negate ? -1.0 : 1.0;
    for (const auto& [col, coef] : expr.terms) {
      ineq_triplets_.emplace_back(static_cast<int>(ineq_rhs_.size()), col, sign * coef);
    }
    ineq_rhs_.push_back(negate ? expr.constant : rhs - expr.constant);
  }

  int n_vars_;
  std::vector<Eigen::Triplet<double>> eq_triplets_;
  std::vector<Eigen::Triplet<double>> ineq_triplets_;
  std::vector<double> eq_rhs_;
  std::vector<double> ineq_rhs_;
  std::vector<ConeBlock> cone_blocks_;
  int orthant_rows_ = 0;
};

}  // namespace

const char* to_string(TimeModel mode) {
  return mode == TimeModel::Endpoint ? "endpoint" : "trapezoidal";
}

TimeModel time_model_from_string(const std::string& name) {
  if (name == "endpoint") return TimeModel::Endpoint;
  if (name == "trapezoidal") return TimeModel::Trapezoidal;
  throw ValidationError("unknown time model '" + name + "' (endpoint|trapezoidal)");
}

std::array<AffineExpr, 3> hyperbolic_cone_rows(const AffineExpr& u, const AffineExpr& w,
                                               const AffineExpr& c) {
  if (c.terms.empty() && c.constant <= 0.0) {
    throw ValidationError("hyperbolic cone: constant c must be positive");
  }
  AffineExpr sum = u;
  sum.terms.insert(sum.terms.end(), w.terms.begin(), w.terms.end());
  sum.constant += w.constant;

  AffineExpr mid = c;
  for (auto& [col, coef] : mid.terms) coef *= 2.0;
  mid.constant *= 2.0;

  AffineExpr diff = u;
  for (const auto& [col, coef] : w.terms) diff.terms.emplace_back(col, -coef);
  diff.constant -= w.constant;

  return {sum, mid, diff};
}

double min_journey_time_s(const DiscretizedRoute& route, TimeModel mode) {
  const int n = route.n_segments;
  const auto& limit = route.point_speed_limit_mps;
  double alpha_sum = 0.0;
  for (int i = 1; i <= n; ++i) {
    if (mode == TimeModel::Endpoint) {
      alpha_sum += 1.0 / limit[i];
    } else {
      const double prev = (i == 1) ? route.start_speed_mps : limit[i - 1];
      const double next = (i == n) ? route.end_speed_mps : limit[i];
      alpha_sum += 2.0 / (prev + next);
    }
  }
  return route.segment_length_m * alpha_sum;
}

std::pair<ConicProgram, VariableMap> build_program(const RollingStock& stock,
                                                   const DiscretizedRoute& route,
                                                   double journey_time_s, TimeModel mode) {
  stock.validate();
  const int n = route.n_segments;
  if (n < 2) throw ValidationError("build: route must have at least 2 segments");
  if (static_cast<int>(route.altitude_change_m.size()) != n ||
      static_cast<int>(route.point_speed_limit_mps.size()) != n + 1) {
    throw ValidationError("build: discretized route arrays are inconsistent");
  }

  const double v_start = route.start_speed_mps;
  const double v_end = route.end_speed_mps;
  if (mode == TimeModel::Endpoint && v_end <= 0.0) {
    throw ValidationError(
        "build: endpoint time model needs a positive terminal speed bound "
        "(alpha_N is undefined at v_N = 0)");
  }

  const double t_min = min_journey_time_s(route, mode);
  if (!(journey_time_s > t_min)) {
    throw InfeasibleTimeError("build: journey time " + std::to_string(journey_time_s) +
                              " s is not achievable; speed limits require more than " +
                              std::to_string(t_min) + " s");
  }

  const VariableMap map{n};
  const double dd = route.segment_length_m;
  // Effort and energy columns in MN and MJ; every row with an energy
  // dimension is stated in MJ. Keeps the matrix entries and the dual
  // multipliers near unit scale.
  const double u = map.energy_unit_J;
  const double mass = stock.mass_kg;
  const double half_m = 0.5 * stock.mass_kg / u;

  ProgramBuilder b(map.num_vars());

  // Punctuality: total relaxed travel time equals the journey time.
  AffineExpr time_row;
  for (int i = 1; i <= n; ++i) time_row.terms.emplace_back(map.alpha(i), dd);
  b.add_equality(time_row, journey_time_s);

  // Energy conservation per segment, with the drag force substituted in:
  // F_i*dd - m/2*(beta_i - beta_{i-1}) - (A + B v_i + C beta_i)*dd
  //   - m*g*dH_i = 0.
  for (int i = 1; i <= n; ++i) {
    AffineExpr row;
    row.terms.emplace_back(map.force(i), dd);
    row.terms.emplace_back(map.beta(i), -(half_m + stock.davis_C_N_per_mps2 * dd / u));
    row.terms.emplace_back(map.speed(i), -stock.davis_B_N_per_mps * dd / u);
    double rhs =
        (stock.davis_A_N * dd + mass * kGravity * route.altitude_change_m[i - 1]) / u;
    if (i >= 2) {
      row.terms.emplace_back(map.beta(i - 1), half_m);
    } else {
      rhs -= half_m * v_start * v_start;  // beta_0 is the fixed constant v_0^2
    }
    b.add_equality(row, rhs);
  }

  if (mode == TimeModel::Trapezoidal) {
    b.add_equality(AffineExpr::variable(map.speed(n)), v_end);
  }

  for (int i = 1; i <= n; ++i) {
    const AffineExpr v_i = AffineExpr::variable(map.speed(i));
    const AffineExpr alpha_i = AffineExpr::variable(map.alpha(i));
    const AffineExpr beta_i = AffineExpr::variable(map.beta(i));
    const AffineExpr force_i = AffineExpr::variable(map.force(i));
    const double v_lim = route.point_speed_limit_mps[i];

    // Electrical energy lower bounds for traction and regeneration.
    AffineExpr traction = AffineExpr::variable(map.force(i), dd / stock.eta_traction);
    traction.terms.emplace_back(map.energy(i), -1.0);
    b.add_upper_bound(traction, 0.0);
    AffineExpr regen = AffineExpr::variable(map.force(i), dd * stock.eta_braking);
    regen.terms.emplace_back(map.energy(i), -1.0);
    b.add_upper_bound(regen, 0.0);

    // Effort box.
    b.add_upper_bound(force_i, stock.max_tractive_effort_N / map.force_unit_N);
    b.add_upper_bound(AffineExpr::variable(map.force(i), -1.0),
                      stock.max_braking_effort_N / map.force_unit_N);

    // Power limits through the relaxed reciprocal speed.
    AffineExpr power_hi = force_i;
    power_hi.terms.emplace_back(map.alpha(i), -stock.max_traction_power_W / u);
    b.add_upper_bound(power_hi, 0.0);
    AffineExpr power_lo = AffineExpr::variable(map.force(i), -1.0);
    power_lo.terms.emplace_back(map.alpha(i), -stock.max_braking_power_W / u);
    b.add_upper_bound(power_lo, 0.0);

    // Speed limits on both the squared-speed proxy and the speed itself.
    b.add_upper_bound(beta_i, v_lim * v_lim);
    b.add_upper_bound(v_i, v_lim);

    // Speed floor. The terminal point uses the boundary condition: a lower
    // bound in endpoint mode, nothing in trapezoidal mode (pinned above).
    if (i < n) {
      b.add_upper_bound(AffineExpr::variable(map.speed(i), -1.0), -kSpeedFloor);
    } else if (mode == TimeModel::Endpoint) {
      b.add_upper_bound(AffineExpr::variable(map.speed(i), -1.0), -v_end);
    }
  }

  const AffineExpr sqrt2 = AffineExpr::literal(std::sqrt(2.0));
  const AffineExpr one = AffineExpr::literal(1.0);
  for (int i = 1; i <= n; ++i) {
    const AffineExpr alpha_i = AffineExpr::variable(map.alpha(i));
    const AffineExpr v_i = AffineExpr::variable(map.speed(i));

    std::array<AffineExpr, 3> time_cone;
    if (mode == TimeModel::Endpoint) {
      time_cone = hyperbolic_cone_rows(alpha_i, v_i, one);
    } else {
      AffineExpr pair_speed = v_i;
      if (i == 1) {
        pair_speed.constant += v_start;
      } else {
        pair_speed.terms.emplace_back(map.speed(i - 1), 1.0);
      }
      time_cone = hyperbolic_cone_rows(alpha_i, pair_speed, sqrt2);
    }
    b.add_cone(ConeKind::SecondOrderCone, time_cone.data(), 3);

    const auto square_cone = hyperbolic_cone_rows(AffineExpr::variable(map.beta(i)), one, v_i);
    b.add_cone(ConeKind::SecondOrderCone, square_cone.data(), 3);
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(map.num_vars());
  for (int i = 1; i <= n; ++i) c[map.energy(i)] = 1.0;

  return {b.finalize(std::move(c)), map};
}

Trajectory extract_trajectory(const ConicSolution& solution, const VariableMap& map,
                              const DiscretizedRoute& route, TimeModel mode) {
  if (solution.status != SolveStatus::Optimal) {
    throw ValidationError(std::string("extract: solution status is ") +
                          to_string(solution.status) + ", not Optimal");
  }
  const int n = map.n_segments;
  if (solution.x.size() != map.num_vars() || route.n_segments != n) {
    throw ValidationError("extract: solution/route dimensions do not match the variable map");
  }

  Trajectory t;
  t.mode = mode;
  t.distance_m.resize(n + 1);
  t.speed_mps.resize(n + 1);
  t.alpha_s_per_m.resize(n);
  t.beta_m2_per_s2.resize(n);
  t.force_N.resize(n);
  t.energy_J.resize(n);

  t.distance_m[0] = 0.0;
  t.speed_mps[0] = route.start_speed_mps;
  double total_energy_j = 0.0;
  for (int i = 1; i <= n; ++i) {
    t.distance_m[i] = i * route.segment_length_m;
    // A pinned standstill boundary comes back from the solver as 0 +- gap;
    // clip roundoff-level negatives so downstream speed checks see 0.
    double v = solution.x[map.speed(i)];
    if (v < 0.0 && v > -1e-6) v = 0.0;
    t.speed_mps[i] = v;
    t.alpha_s_per_m[i - 1] = solution.x[map.alpha(i)];
    t.beta_m2_per_s2[i - 1] = solution.x[map.beta(i)];
    t.force_N[i - 1] = solution.x[map.force(i)] * map.force_unit_N;
    t.energy_J[i - 1] = solution.x[map.energy(i)] * map.energy_unit_J;
    total_energy_j += t.energy_J[i - 1];
  }
  t.objective_kwh = total_energy_j / 3.6e6;
  t.iterations = solution.iterations;
  t.relative_gap = solution.relative_gap;
  t.wall_time_s = solution.wall_time_s;
  return t;
}

}  // namespace railconic
