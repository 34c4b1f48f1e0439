#pragma once

#include <Eigen/Dense>

#include "railconic/conic.hpp"

namespace railconic {

struct SolverSettings {
  double gap_tol = 1e-8;    // relative duality gap at optimality
  double feas_tol = 1e-8;   // relative primal/dual residuals
  int max_iterations = 200;
  double static_regularization = 1e-9;
  int verbosity = 0;  // 1: one line per iteration

  void validate() const;
};

enum class SolveStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  IterationLimit,
  NumericalError,
};

const char* to_string(SolveStatus status);

/// Solver output. For Optimal solves (x, y, z, s) satisfy the program at the
/// requested tolerances. For infeasible statuses (y, z) resp. (x, s) carry
/// the normalized certificate.
struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x;  // primal variables
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // cone multipliers
  Eigen::VectorXd s;  // cone slacks
  double primal_objective = 0.0;
  double relative_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
};

/// Solves the conic program with a homogeneous self-dual primal-dual
/// interior-point method (Nesterov-Todd scaling, Mehrotra predictor-
/// corrector). Deterministic: identical inputs give identical output.
ConicSolution solve(const ConicProgram& program, const SolverSettings& settings = {});

/// Residuals recomputed from the program data alone, for verification
/// independent of the solver path.
struct ResidualReport {
  double eq_residual = 0.0;        // ||eq x - eq_rhs|| / (1 + ||eq_rhs||)
  double cone_residual = 0.0;      // ||ineq x + s - ineq_rhs|| / (1 + ||ineq_rhs||)
  double dual_residual = 0.0;      // ||c + eq' y + ineq' z|| / (1 + ||c||)
  double relative_gap = 0.0;       // |c'x + rhs'y + h'z| / (1 + |c'x|)
  double min_slack_margin = 0.0;   // most negative cone margin of s
  double min_dual_margin = 0.0;    // most negative dual-cone margin of z
};

ResidualReport residuals(const ConicProgram& program, const ConicSolution& solution);

}  // namespace railconic
