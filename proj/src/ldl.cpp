#include "ldl.hpp"

#include <Eigen/OrderingMethods>
#include <cmath>
#include <numeric>

namespace railconic::detail {

namespace {

// Builds the permuted upper-triangular pattern of P A P' from the lower
// triangle of A, plus the value scatter map. Entries within a column are in
// insertion order; the elimination-tree algorithms do not need them sorted.
void permuted_upper_pattern(const Eigen::SparseMatrix<double>& lower,
                            const std::vector<int>& perm, std::vector<int>& ap,
                            std::vector<int>& ai, std::vector<int>& scatter) {
  const int n = static_cast<int>(lower.rows());
  const auto* outer = lower.outerIndexPtr();
  const auto* inner = lower.innerIndexPtr();
  const int nnz = static_cast<int>(lower.nonZeros());

  std::vector<int> count(n, 0);
  std::vector<int> dest_col(nnz), dest_row(nnz);
  for (int j = 0; j < n; ++j) {
    for (int t = outer[j]; t < outer[j + 1]; ++t) {
      const int pi = perm[inner[t]];
      const int pj = perm[j];
      dest_row[t] = std::min(pi, pj);
      dest_col[t] = std::max(pi, pj);
      ++count[dest_col[t]];
    }
  }
  ap.assign(n + 1, 0);
  for (int j = 0; j < n; ++j) ap[j + 1] = ap[j] + count[j];
  ai.assign(nnz, 0);
  scatter.assign(nnz, 0);
  std::vector<int> next(ap.begin(), ap.end() - 1);
  for (int t = 0; t < nnz; ++t) {
    const int slot = next[dest_col[t]]++;
    ai[slot] = dest_row[t];
    scatter[t] = slot;
  }
}

}  // namespace

// Elimination tree and per-column fill counts for an upper-triangular CSC
// pattern with full diagonal.
void QuasiDefiniteLdl::symbolic(const std::vector<int>& ap, const std::vector<int>& ai,
                                std::vector<int>& lnz_per_col) {
  parent_.assign(n_, -1);
  lnz_per_col.assign(n_, 0);
  flag_.assign(n_, -1);
  for (int k = 0; k < n_; ++k) {
    parent_[k] = -1;
    flag_[k] = k;
    for (int p = ap[k]; p < ap[k + 1]; ++p) {
      int i = ai[p];
      if (i >= k) continue;
      for (; flag_[i] != k; i = parent_[i]) {
        if (parent_[i] == -1) parent_[i] = k;
        ++lnz_per_col[i];
        flag_[i] = k;
      }
    }
  }
}

void QuasiDefiniteLdl::analyze(const Eigen::SparseMatrix<double>& lower,
                               const Eigen::VectorXd& signs) {
  n_ = static_cast<int>(lower.rows());

  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pm;
  Eigen::AMDOrdering<int> amd;
  amd(lower.selfadjointView<Eigen::Lower>(), pm);

  // Either direction of the permutation is valid; pick the one with less
  // fill-in (conventions differ between callers of AMD).
  std::vector<int> cand_a(pm.indices().data(), pm.indices().data() + n_);
  std::vector<int> cand_b(n_);
  for (int i = 0; i < n_; ++i) cand_b[cand_a[i]] = i;

  long best_fill = -1;
  for (const auto& cand : {cand_a, cand_b}) {
    std::vector<int> ap, ai, scatter, lnz_col;
    permuted_upper_pattern(lower, cand, ap, ai, scatter);
    symbolic(ap, ai, lnz_col);
    const long fill = std::accumulate(lnz_col.begin(), lnz_col.end(), 0L);
    if (best_fill < 0 || fill < best_fill) {
      best_fill = fill;
      perm_ = cand;
      ap_ = std::move(ap);
      ai_ = std::move(ai);
      scatter_ = std::move(scatter);
      lp_.assign(n_ + 1, 0);
      for (int j = 0; j < n_; ++j) lp_[j + 1] = lp_[j] + lnz_col[j];
    }
  }

  iperm_.assign(n_, 0);
  for (int i = 0; i < n_; ++i) iperm_[perm_[i]] = i;
  signs_perm_.assign(n_, 1.0);
  for (int i = 0; i < n_; ++i) signs_perm_[perm_[i]] = signs(i);

  ax_.assign(ai_.size(), 0.0);
  li_.assign(lp_[n_], 0);
  lx_.assign(lp_[n_], 0.0);
  d_.assign(n_, 0.0);
  pattern_.assign(n_, 0);
  lnz_.assign(n_, 0);
  y_.assign(n_, 0.0);
}

int QuasiDefiniteLdl::factorize(const Eigen::SparseMatrix<double>& lower, double pivot_clamp) {
  const double* src = lower.valuePtr();
  for (size_t t = 0; t < scatter_.size(); ++t) ax_[scatter_[t]] = src[t];

  int clamped = 0;
  std::fill(flag_.begin(), flag_.end(), -1);
  std::fill(y_.begin(), y_.end(), 0.0);

  for (int k = 0; k < n_; ++k) {
    // Nonzero pattern of row k of L in topological order via the etree.
    int top = n_;
    y_[k] = 0.0;
    flag_[k] = k;
    lnz_[k] = 0;
    for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
      int i = ai_[p];
      y_[i] += ax_[p];
      int len = 0;
      for (; flag_[i] != k; i = parent_[i]) {
        pattern_[len++] = i;
        flag_[i] = k;
      }
      while (len > 0) pattern_[--top] = pattern_[--len];
    }

    double dk = y_[k];
    y_[k] = 0.0;
    for (; top < n_; ++top) {
      const int i = pattern_[top];
      const double yi = y_[i];
      y_[i] = 0.0;
      const int p2 = lp_[i] + lnz_[i];
      for (int p = lp_[i]; p < p2; ++p) y_[li_[p]] -= lx_[p] * yi;
      const double l_ki = yi / d_[i];
      dk -= l_ki * yi;
      li_[p2] = k;
      lx_[p2] = l_ki;
      ++lnz_[i];
    }

    if (!std::isfinite(dk)) return -1;
    if (signs_perm_[k] > 0.0 ? dk < pivot_clamp : dk > -pivot_clamp) {
      dk = signs_perm_[k] * pivot_clamp;
      ++clamped;
    }
    d_[k] = dk;
  }
  return clamped;
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  std::vector<double> x(n_);
  for (int i = 0; i < n_; ++i) x[perm_[i]] = rhs(i);

  for (int j = 0; j < n_; ++j) {
    const double xj = x[j];
    const int p2 = lp_[j] + lnz_[j];
    for (int p = lp_[j]; p < p2; ++p) x[li_[p]] -= lx_[p] * xj;
  }
  for (int j = 0; j < n_; ++j) x[j] /= d_[j];
  for (int j = n_ - 1; j >= 0; --j) {
    double xj = x[j];
    const int p2 = lp_[j] + lnz_[j];
    for (int p = lp_[j]; p < p2; ++p) xj -= lx_[p] * x[li_[p]];
    x[j] = xj;
  }

  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) out(i) = x[perm_[i]];
  return out;
}

}  // namespace railconic::detail
