#pragma once

#include <Eigen/SparseCore>
#include <vector>

namespace railconic {

enum class ConeKind {
  NonnegativeOrthant,      // s >= 0 componentwise
  SecondOrderCone,         // s0 >= ||s1..k||
  RotatedSecondOrderCone,  // s0 * s1 >= ||s2..k||^2, s0, s1 >= 0
};

struct ConeBlock {
  ConeKind kind = ConeKind::NonnegativeOrthant;
  int dim = 0;
};

/// Standard-form conic program
///
///   minimize    c' x
///   subject to  eq x = eq_rhs
///               ineq x + s = ineq_rhs,  s in K
///
/// where K is the product of the listed cone blocks, in row order.
struct ConicProgram {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> eq;
  Eigen::VectorXd eq_rhs;
  Eigen::SparseMatrix<double> ineq;
  Eigen::VectorXd ineq_rhs;
  std::vector<ConeBlock> cones;

  Eigen::Index num_vars() const { return c.size(); }
  Eigen::Index num_eq() const { return eq_rhs.size(); }
  Eigen::Index num_ineq() const { return ineq_rhs.size(); }

  /// Throws ValidationError on any dimension or cone-layout inconsistency.
  void validate() const;
};

/// Distance of s to each cone block boundary, negative when outside.
/// Orthant blocks report min(s_i); SOC blocks s0 - ||s1..k||; rotated blocks
/// min(s0, s1, s0*s1 - ||s2..k||^2).
std::vector<double> cone_margins(const ConicProgram& program, const Eigen::VectorXd& s);

/// Same for the dual cone (the dual of a rotated block u*w >= ||z||^2 is
/// a*b >= ||d||^2 / 4; orthant and SOC blocks are self-dual).
std::vector<double> dual_cone_margins(const ConicProgram& program, const Eigen::VectorXd& z);

}  // namespace railconic
