#include <cmath>

#include "railconic/errors.hpp"
#include "railconic/solver.hpp"

namespace railconic {

// Recomputes every residual from the program data and the returned vectors
// only. Deliberately shares no code with the solve path.
ResidualReport residuals(const ConicProgram& program, const ConicSolution& solution) {
  program.validate();
  const Eigen::Index n = program.num_vars();
  const Eigen::Index p = program.num_eq();
  const Eigen::Index m = program.num_ineq();
  if (solution.x.size() != n || solution.s.size() != m || solution.z.size() != m ||
      solution.y.size() != p) {
    throw ValidationError("residuals: solution dimensions do not match the program");
  }

  ResidualReport r;
  if (p > 0) {
    r.eq_residual = (program.eq * solution.x - program.eq_rhs).norm() /
                    (1.0 + program.eq_rhs.norm());
  }
  r.cone_residual = (program.ineq * solution.x + solution.s - program.ineq_rhs).norm() /
                    (1.0 + program.ineq_rhs.norm());

  Eigen::VectorXd dual = program.c + program.ineq.transpose() * solution.z;
  if (p > 0) dual += program.eq.transpose() * solution.y;
  r.dual_residual = dual.norm() / (1.0 + program.c.norm());

  const double cx = program.c.dot(solution.x);
  const double by = p > 0 ? program.eq_rhs.dot(solution.y) : 0.0;
  const double hz = program.ineq_rhs.dot(solution.z);
  r.relative_gap = std::abs(cx + by + hz) / (1.0 + std::abs(cx));

  r.min_slack_margin = std::numeric_limits<double>::infinity();
  for (double margin : cone_margins(program, solution.s)) {
    r.min_slack_margin = std::min(r.min_slack_margin, margin);
  }
  r.min_dual_margin = std::numeric_limits<double>::infinity();
  for (double margin : dual_cone_margins(program, solution.z)) {
    r.min_dual_margin = std::min(r.min_dual_margin, margin);
  }
  return r;
}

}  // namespace railconic
