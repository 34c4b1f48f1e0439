#include "railconic/conic.hpp"

#include <cmath>

#include "railconic/errors.hpp"

namespace railconic {

void ConicProgram::validate() const {
  const Eigen::Index n = num_vars();
  if (n <= 0) throw ValidationError("program: no variables");
  if (eq.rows() != eq_rhs.size()) throw ValidationError("program: eq/eq_rhs row mismatch");
  if (eq.rows() > 0 && eq.cols() != n) throw ValidationError("program: eq column mismatch");
  if (ineq.rows() != ineq_rhs.size()) {
    throw ValidationError("program: ineq/ineq_rhs row mismatch");
  }
  if (ineq.cols() != n) throw ValidationError("program: ineq column mismatch");

  Eigen::Index cone_dim = 0;
  for (const auto& block : cones) {
    int min_dim = 1;
    if (block.kind == ConeKind::SecondOrderCone) min_dim = 2;
    if (block.kind == ConeKind::RotatedSecondOrderCone) min_dim = 3;
    if (block.dim < min_dim) throw ValidationError("program: cone block dimension too small");
    cone_dim += block.dim;
  }
  if (cone_dim != num_ineq()) {
    throw ValidationError("program: cone dimensions do not cover the inequality rows");
  }
}

std::vector<double> cone_margins(const ConicProgram& program, const Eigen::VectorXd& s) {
  std::vector<double> margins;
  margins.reserve(program.cones.size());
  Eigen::Index at = 0;
  for (const auto& block : program.cones) {
    const auto v = s.segment(at, block.dim);
    switch (block.kind) {
      case ConeKind::NonnegativeOrthant:
        margins.push_back(v.minCoeff());
        break;
      case ConeKind::SecondOrderCone:
        margins.push_back(v(0) - v.tail(block.dim - 1).norm());
        break;
      case ConeKind::RotatedSecondOrderCone: {
        const double hyper = v(0) * v(1) - v.tail(block.dim - 2).squaredNorm();
        margins.push_back(std::min({v(0), v(1), hyper}));
        break;
      }
    }
    at += block.dim;
  }
  return margins;
}

std::vector<double> dual_cone_margins(const ConicProgram& program, const Eigen::VectorXd& z) {
  std::vector<double> margins;
  margins.reserve(program.cones.size());
  Eigen::Index at = 0;
  for (const auto& block : program.cones) {
    const auto v = z.segment(at, block.dim);
    switch (block.kind) {
      case ConeKind::NonnegativeOrthant:
        margins.push_back(v.minCoeff());
        break;
      case ConeKind::SecondOrderCone:
        margins.push_back(v(0) - v.tail(block.dim - 1).norm());
        break;
      case ConeKind::RotatedSecondOrderCone: {
        const double hyper = v(0) * v(1) - 0.25 * v.tail(block.dim - 2).squaredNorm();
        margins.push_back(std::min({v(0), v(1), hyper}));
        break;
      }
    }
    at += block.dim;
  }
  return margins;
}

}  // namespace railconic
