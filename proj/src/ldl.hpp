#pragma once

#include <Eigen/SparseCore>
#include <vector>

namespace railconic::detail {

/// Sparse LDL' factorization for symmetric quasi-definite matrices: AMD
/// fill-reducing ordering, static symbolic pattern, and dynamic pivot
/// clamping (each pivot is forced onto its expected sign with magnitude at
/// least the clamp value, the usual trick to keep elimination stable without
/// numerical pivoting).
class QuasiDefiniteLdl {
 public:
  /// One-time symbolic analysis. `lower` holds the lower triangle in CSC
  /// form with a full diagonal; `signs` gives the expected pivot sign per
  /// row (+1/-1). The sparsity pattern must not change afterwards.
  void analyze(const Eigen::SparseMatrix<double>& lower, const Eigen::VectorXd& signs);

  /// Refactors a matrix with the analyzed pattern. Returns the number of
  /// clamped pivots, or -1 if the factorization produced non-finite values.
  int factorize(const Eigen::SparseMatrix<double>& lower, double pivot_clamp);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int dim() const { return n_; }

 private:
  void symbolic(const std::vector<int>& ap, const std::vector<int>& ai,
                std::vector<int>& lnz_per_col);

  int n_ = 0;
  std::vector<int> perm_, iperm_;  // permuted index = perm_[original index]

  // A' = P A P', upper triangle, CSC; values scattered per factorization.
  std::vector<int> ap_, ai_;
  std::vector<double> ax_;
  std::vector<int> scatter_;  // source slot in `lower` -> slot in ax_

  std::vector<int> parent_;
  std::vector<int> lp_;
  std::vector<int> li_;
  std::vector<double> lx_;
  std::vector<double> d_;
  std::vector<double> signs_perm_;

  // workspace for the numeric phase
  mutable std::vector<int> flag_, pattern_, lnz_;
  mutable std::vector<double> y_;
};

}  // namespace railconic::detail
