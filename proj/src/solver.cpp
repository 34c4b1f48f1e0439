#include "railconic/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "railconic/errors.hpp"

namespace railconic {

void SolverSettings::validate() const {
  if (!(gap_tol > 0.0) || !(feas_tol > 0.0) || !(static_regularization > 0.0)) {
    throw ValidationError("solver settings: tolerances must be positive");
  }
  if (max_iterations < 1) {
    throw ValidationError("solver settings: max_iterations must be >= 1");
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalError: return "NumericalError";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Eigen::Index;

// Algorithm constants (the four user-facing tolerances live in SolverSettings).
constexpr double kStepMax = 0.999;
constexpr double kStepMin = 1e-6;
constexpr double kStepBackoff = 0.99;       // gamma, applied to the combined step
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 0.999;
constexpr double kResidualBlowup = 500.0;   // safeguard on the primal residual
constexpr int kMaxRefine = 9;
constexpr double kRefineTol = 1e-14;
constexpr int kEquilIterations = 3;
constexpr int kRegularizationRetries = 3;

struct LpRun {
  Index offset = 0;
  Index dim = 0;
};

struct SocBlock {
  Index offset = 0;
  Index dim = 0;
  // Nesterov-Todd scaling W = eta * Wbar with Wbar built from the unit-
  // hyperbolic point (a, q), a^2 - |q|^2 = 1.
  double eta_sq = 1.0;
  double a = 1.0;
  Vec q;
};

struct RotatedBlock {
  Index offset = 0;
  Index dim = 0;
};

// In-place linear map taking a rotated-cone slack (u, w, t...) with
// u*w >= |t|^2 to a plain second-order cone vector, and its companions for
// the inverse and the dual transport. All three preserve s'z.
void rotated_to_soc(Eigen::Ref<Vec> v) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double u = v(0), w = v(1);
  v(0) = (u + w) * inv_sqrt2;
  v(1) = (u - w) * inv_sqrt2;
  v.tail(v.size() - 2) *= std::sqrt(2.0);
}

void soc_to_rotated_slack(Eigen::Ref<Vec> v) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double s0 = v(0), s1 = v(1);
  v(0) = (s0 + s1) * inv_sqrt2;
  v(1) = (s0 - s1) * inv_sqrt2;
  v.tail(v.size() - 2) *= inv_sqrt2;
}

void soc_to_rotated_dual(Eigen::Ref<Vec> v) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double z0 = v(0), z1 = v(1);
  v(0) = (z0 + z1) * inv_sqrt2;
  v(1) = (z0 - z1) * inv_sqrt2;
  v.tail(v.size() - 2) *= std::sqrt(2.0);
}

Index find_kkt_slot(const SpMat& k, Index row, Index col) {
  for (Index p = k.outerIndexPtr()[col]; p < k.outerIndexPtr()[col + 1]; ++p) {
    if (k.innerIndexPtr()[p] == row) return p;
  }
  throw ValidationError("solver: KKT pattern entry missing");
}

class HsdSolver {
 public:
  HsdSolver(const ConicProgram& program, const SolverSettings& settings)
      : original_(program), settings_(settings) {
    standardize();
    equilibrate();
    setup_kkt();
  }

  ConicSolution run();

 private:
  // ---- problem in internal form (rotated cones mapped, data equilibrated) --
  const ConicProgram& original_;
  SolverSettings settings_;
  double delta_ = 0.0;  // static regularization, may grow on retries

  Index n_ = 0, p_ = 0, m_ = 0;
  SpMat a_, g_, at_, gt_;
  Vec c_, b_, h_;
  std::vector<LpRun> lp_;
  std::vector<SocBlock> socs_;
  std::vector<RotatedBlock> rotated_;
  Index degree_ = 0;

  Vec x_equil_, a_equil_, g_equil_;

  // ---- KKT system ----------------------------------------------------------
  SpMat kkt_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
  std::vector<Index> xy_slots_;                 // x/y diagonal entries
  std::vector<Index> lp_slots_;                 // diagonal entries per LP row
  std::vector<std::vector<Index>> soc_slots_;   // dense lower block per cone
  Vec lp_v_;                                    // LP scaling w^2 = s/z per row
  Vec reg_sign_;                                // +1 on x rows, -1 on y/z rows
  double delta_active_ = 0.0;                   // regularization in the matrix

  // ---- iterate --------------------------------------------------------------
  Vec x_, y_, z_, s_, lambda_;
  double tau_ = 1.0, kap_ = 1.0;

  // residuals in the embedding
  Vec rx_, ry_, rz_;
  double rt_ = 0.0;
  double hresx_ = 0.0, hresy_ = 0.0, hresz_ = 0.0;
  double cx_ = 0.0, by_ = 0.0, hz_ = 0.0;
  double resx0_ = 1.0, resy0_ = 1.0, resz0_ = 1.0;
  double pres_ = 0.0, dres_ = 0.0, gap_ = 0.0, mu_ = 0.0;
  double pinfres_ = -1.0, dinfres_ = -1.0;  // negative = undefined

  void standardize();
  void equilibrate();
  void setup_kkt();
  void update_kkt_values();
  void bump_regularization(double delta);
  bool factorize();
  void kkt_residual(const Vec& rhs, const Vec& sol, Vec& err) const;
  int solve_kkt(const Vec& rhs, Vec& dx, Vec& dy, Vec& dz) const;

  void bring_to_cone(const Vec& r, Vec& s) const;
  bool update_scalings();
  void scale(const Vec& z, Vec& out) const;
  void conic_product(const Vec& u, const Vec& v, Vec& out) const;
  void conic_division(const Vec& u, const Vec& w, Vec& out) const;
  double max_step(const Vec& ds_scaled, const Vec& dz_scaled, double dtau, double dkap) const;

  void compute_residuals();

  // Candidate solution in the coordinates of the original program.
  ConicSolution current_solution() const;
  static void external_residuals(const ConicProgram& p, ConicSolution& sol);
  bool externally_optimal(const ConicSolution& sol) const;
  bool primal_infeasibility_certificate(ConicSolution& sol) const;
  bool dual_infeasibility_certificate(ConicSolution& sol) const;
};

// Maps rotated cones to plain second-order cones and splits the cone list
// into LP runs and SOC blocks.
void HsdSolver::standardize() {
  n_ = original_.num_vars();
  p_ = original_.num_eq();
  m_ = original_.num_ineq();

  a_ = original_.eq;
  b_ = original_.eq_rhs;
  c_ = original_.c;
  h_ = original_.ineq_rhs;

  Index at = 0;
  bool any_rotated = false;
  for (const auto& block : original_.cones) {
    switch (block.kind) {
      case ConeKind::NonnegativeOrthant:
        if (!lp_.empty() && lp_.back().offset + lp_.back().dim == at) {
          lp_.back().dim += block.dim;  // merge adjacent runs
        } else {
          lp_.push_back({at, block.dim});
        }
        degree_ += block.dim;
        break;
      case ConeKind::SecondOrderCone:
        socs_.push_back({at, block.dim});
        degree_ += 1;
        break;
      case ConeKind::RotatedSecondOrderCone:
        rotated_.push_back({at, block.dim});
        socs_.push_back({at, block.dim});
        degree_ += 1;
        any_rotated = true;
        break;
    }
    at += block.dim;
  }

  if (any_rotated) {
    // Rewrite the affected rows of [G | h] in the plain SOC coordinates.
    SpMat g_rows = original_.ineq;
    Eigen::SparseMatrix<double, Eigen::RowMajor> gr(g_rows);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::SparseMatrix<double, Eigen::RowMajor> out(m_, n_);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(gr.nonZeros() * 2);
    for (const auto& rb : rotated_) {
      const Index r0 = rb.offset, r1 = rb.offset + 1;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gr, r0); it; ++it) {
        trips.emplace_back(r0, it.col(), it.value() * inv_sqrt2);
        trips.emplace_back(r1, it.col(), it.value() * inv_sqrt2);
      }
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gr, r1); it; ++it) {
        trips.emplace_back(r0, it.col(), it.value() * inv_sqrt2);
        trips.emplace_back(r1, it.col(), -it.value() * inv_sqrt2);
      }
      const double sq2 = std::sqrt(2.0);
      h_(r0) = (original_.ineq_rhs(r0) + original_.ineq_rhs(r1)) * inv_sqrt2;
      h_(r1) = (original_.ineq_rhs(r0) - original_.ineq_rhs(r1)) * inv_sqrt2;
      for (Index r = rb.offset + 2; r < rb.offset + rb.dim; ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gr, r); it; ++it) {
          trips.emplace_back(r, it.col(), it.value() * sq2);
        }
        h_(r) = original_.ineq_rhs(r) * sq2;
      }
    }
    // Copy untouched rows.
    std::vector<bool> touched(m_, false);
    for (const auto& rb : rotated_) {
      for (Index r = rb.offset; r < rb.offset + rb.dim; ++r) touched[r] = true;
    }
    for (Index r = 0; r < m_; ++r) {
      if (touched[r]) continue;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gr, r); it; ++it) {
        trips.emplace_back(r, it.col(), it.value());
      }
    }
    out.setFromTriplets(trips.begin(), trips.end());
    g_ = SpMat(out);
  } else {
    g_ = original_.ineq;
  }
}

void HsdSolver::equilibrate() {
  x_equil_ = Vec::Ones(n_);
  a_equil_ = Vec::Ones(p_);
  g_equil_ = Vec::Ones(m_);

  auto max_cols = [](Vec& e, const SpMat& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
      for (SpMat::InnerIterator it(m, j); it; ++it) {
        e(j) = std::max(e(j), std::abs(it.value()));
      }
    }
  };
  auto max_rows = [](Vec& e, const SpMat& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
      for (SpMat::InnerIterator it(m, j); it; ++it) {
        e(it.row()) = std::max(e(it.row()), std::abs(it.value()));
      }
    }
  };
  auto scale_rows = [](const Vec& e, SpMat& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
      for (SpMat::InnerIterator it(m, j); it; ++it) it.valueRef() /= e(it.row());
    }
  };
  auto scale_cols = [](const Vec& e, SpMat& m) {
    for (int j = 0; j < m.outerSize(); ++j) {
      for (SpMat::InnerIterator it(m, j); it; ++it) it.valueRef() /= e(j);
    }
  };
  auto sqrt_or_one = [](double v) { return v < 1e-6 ? 1.0 : std::sqrt(v); };

  for (int iter = 0; iter < kEquilIterations; ++iter) {
    Vec xt = Vec::Zero(n_), at = Vec::Zero(p_), gt = Vec::Zero(m_);
    max_cols(xt, a_);
    max_cols(xt, g_);
    max_rows(at, a_);
    max_rows(gt, g_);

    // Rows of one cone block must share a scaling factor to keep the block
    // a second-order cone.
    for (const auto& sc : socs_) {
      const double total = gt.segment(sc.offset, sc.dim).sum();
      gt.segment(sc.offset, sc.dim).setConstant(total);
    }

    xt = xt.unaryExpr(sqrt_or_one);
    at = at.unaryExpr(sqrt_or_one);
    gt = gt.unaryExpr(sqrt_or_one);

    scale_rows(at, a_);
    scale_rows(gt, g_);
    scale_cols(xt, a_);
    scale_cols(xt, g_);

    x_equil_ = x_equil_.cwiseProduct(xt);
    a_equil_ = a_equil_.cwiseProduct(at);
    g_equil_ = g_equil_.cwiseProduct(gt);
  }

  c_ = c_.cwiseQuotient(x_equil_);
  b_ = b_.cwiseQuotient(a_equil_);
  h_ = h_.cwiseQuotient(g_equil_);

  at_ = a_.transpose();
  gt_ = g_.transpose();

  resx0_ = std::max(1.0, c_.norm());
  resy0_ = std::max(1.0, b_.norm());
  resz0_ = std::max(1.0, h_.norm());
}

void HsdSolver::setup_kkt() {
  delta_ = settings_.static_regularization;
  const Index dim = n_ + p_ + m_;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(dim + a_.nonZeros() + g_.nonZeros() + 4 * m_));

  for (Index j = 0; j < n_; ++j) trips.emplace_back(j, j, delta_);
  for (int j = 0; j < a_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(a_, j); it; ++it) {
      trips.emplace_back(n_ + it.row(), it.col(), it.value());
    }
  }
  for (Index j = 0; j < p_; ++j) trips.emplace_back(n_ + j, n_ + j, -delta_);
  for (int j = 0; j < g_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(g_, j); it; ++it) {
      trips.emplace_back(n_ + p_ + it.row(), it.col(), it.value());
    }
  }
  // Scaling block -(W'W) - delta*I: diagonal for LP rows, a dense lower
  // triangle per second-order cone. Values are placeholders until
  // update_kkt_values() runs.
  for (const auto& run : lp_) {
    for (Index r = 0; r < run.dim; ++r) {
      const Index rr = n_ + p_ + run.offset + r;
      trips.emplace_back(rr, rr, -1.0);
    }
  }
  for (const auto& sc : socs_) {
    for (Index i = 0; i < sc.dim; ++i) {
      for (Index j = 0; j <= i; ++j) {
        trips.emplace_back(n_ + p_ + sc.offset + i, n_ + p_ + sc.offset + j, -(i == j));
      }
    }
  }

  kkt_.resize(dim, dim);
  kkt_.setFromTriplets(trips.begin(), trips.end());
  kkt_.makeCompressed();

  xy_slots_.clear();
  for (Index j = 0; j < n_ + p_; ++j) xy_slots_.push_back(find_kkt_slot(kkt_, j, j));
  lp_slots_.clear();
  for (const auto& run : lp_) {
    for (Index r = 0; r < run.dim; ++r) {
      const Index rr = n_ + p_ + run.offset + r;
      lp_slots_.push_back(find_kkt_slot(kkt_, rr, rr));
    }
  }
  soc_slots_.clear();
  for (const auto& sc : socs_) {
    std::vector<Index> slots;
    for (Index i = 0; i < sc.dim; ++i) {
      for (Index j = 0; j <= i; ++j) {
        slots.push_back(find_kkt_slot(kkt_, n_ + p_ + sc.offset + i, n_ + p_ + sc.offset + j));
      }
    }
    soc_slots_.push_back(std::move(slots));
  }

  reg_sign_ = Vec::Ones(dim);
  reg_sign_.tail(p_ + m_).setConstant(-1.0);

  lp_v_ = Vec::Ones(m_);
  for (auto& sc : socs_) {
    sc.q = Vec::Zero(sc.dim - 1);
    sc.a = 1.0;
    sc.eta_sq = 1.0;
  }

  update_kkt_values();
  ldlt_.analyzePattern(kkt_);
}

void HsdSolver::update_kkt_values() {
  delta_active_ = delta_;
  double* vals = kkt_.valuePtr();
  for (Index j = 0; j < n_; ++j) vals[xy_slots_[j]] = delta_active_;
  for (Index j = 0; j < p_; ++j) vals[xy_slots_[n_ + j]] = -delta_active_;

  size_t k = 0;
  for (const auto& run : lp_) {
    for (Index r = 0; r < run.dim; ++r) {
      vals[lp_slots_[k++]] = -lp_v_(run.offset + r) - delta_active_;
    }
  }
  size_t blk = 0;
  for (const auto& sc : socs_) {
    const auto& slots = soc_slots_[blk++];
    size_t at = 0;
    for (Index i = 0; i < sc.dim; ++i) {
      const double vi = (i == 0) ? sc.a : sc.q(i - 1);
      for (Index j = 0; j <= i; ++j) {
        const double vj = (j == 0) ? sc.a : sc.q(j - 1);
        double wbar_sq = 2.0 * vi * vj;
        if (i == j) wbar_sq -= (i == 0) ? 1.0 : -1.0;  // minus J diagonal
        double value = -sc.eta_sq * wbar_sq;
        if (i == j) value -= delta_active_;
        vals[slots[at++]] = value;
      }
    }
  }
}

// Bumps only the regularization entries, leaving the scaling values alone.
void HsdSolver::bump_regularization(double delta) {
  const double shift = delta - delta_active_;
  double* vals = kkt_.valuePtr();
  for (Index j = 0; j < n_; ++j) vals[xy_slots_[j]] += shift;
  for (Index j = 0; j < p_; ++j) vals[xy_slots_[n_ + j]] -= shift;
  for (const auto slot : lp_slots_) vals[slot] -= shift;
  size_t blk = 0;
  for (const auto& sc : socs_) {
    const auto& slots = soc_slots_[blk++];
    size_t at = 0;
    for (Index i = 0; i < sc.dim; ++i) {
      for (Index j = 0; j <= i; ++j, ++at) {
        if (i == j) vals[slots[at]] -= shift;
      }
    }
  }
  delta_active_ = delta;
}

// Factors the current KKT matrix. A quasi-definite matrix must come out
// with n positive and p+m negative pivots; on drift the regularization is
// raised for this factorization only. A finite factorization with wrong
// inertia is still accepted as a last resort and left to refinement.
bool HsdSolver::factorize() {
  bool have_finite = false;
  for (int attempt = 0; attempt <= kRegularizationRetries; ++attempt) {
    ldlt_.factorize(kkt_);
    if (ldlt_.info() == Eigen::Success) {
      const Vec& d = ldlt_.vectorD();
      if (d.allFinite() && (d.array() != 0.0).all()) {
        have_finite = true;
        if ((d.array() > 0.0).count() == n_) return true;
      }
    }
    if (attempt < kRegularizationRetries) {
      bump_regularization(std::max(delta_active_, 1e-10) * 100.0);
    }
  }
  return have_finite;
}

// Residual rhs - K_exact * sol with extended-precision accumulation; the
// cancellation in this difference is what limits plain double refinement.
// K_exact is the stored matrix without the static regularization.
void HsdSolver::kkt_residual(const Vec& rhs, const Vec& sol, Vec& err) const {
  const Index dim = n_ + p_ + m_;
  static_assert(sizeof(long double) > sizeof(double), "extended precision expected");
  std::vector<long double> acc(static_cast<size_t>(dim));
  for (Index i = 0; i < dim; ++i) acc[i] = rhs(i);
  const auto* outer = kkt_.outerIndexPtr();
  const auto* inner = kkt_.innerIndexPtr();
  const double* vals = kkt_.valuePtr();
  for (Index j = 0; j < dim; ++j) {
    const long double xj = sol(j);
    for (Index p = outer[j]; p < outer[j + 1]; ++p) {
      const Index i = inner[p];
      const long double v = vals[p];
      acc[i] -= v * xj;
      if (i != j) acc[j] -= v * sol(i);  // mirrored upper-triangle entry
    }
  }
  for (Index i = 0; i < dim; ++i) {
    acc[i] += static_cast<long double>(delta_active_) * reg_sign_(i) * sol(i);
    err(i) = static_cast<double>(acc[i]);
  }
}

// Solves the regularized KKT system and refines against the exact
// (unregularized) matrix. Returns the number of refinement steps.
int HsdSolver::solve_kkt(const Vec& rhs, Vec& dx, Vec& dy, Vec& dz) const {
  Vec sol = ldlt_.solve(rhs);
  const double threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * kRefineTol;

  double prev_err = std::numeric_limits<double>::max();
  Vec correction;
  Vec err(n_ + p_ + m_);
  int k = 0;
  for (k = 0; k <= kMaxRefine; ++k) {
    kkt_residual(rhs, sol, err);
    const double nerr = err.lpNorm<Eigen::Infinity>();
    if (k > 0 && nerr > prev_err) {
      sol -= correction;  // refinement made it worse, undo
      break;
    }
    if (nerr < threshold || k == kMaxRefine) break;
    prev_err = nerr;
    correction = ldlt_.solve(err);
    sol += correction;
  }

  dx = sol.head(n_);
  dy = sol.segment(n_, p_);
  dz = sol.tail(m_);
  return k;
}

void HsdSolver::bring_to_cone(const Vec& r, Vec& s) const {
  double worst = -0.99;
  for (const auto& run : lp_) {
    worst = std::max(worst, -r.segment(run.offset, run.dim).minCoeff());
  }
  for (const auto& sc : socs_) {
    const double margin = r(sc.offset) - r.segment(sc.offset + 1, sc.dim - 1).norm();
    worst = std::max(worst, -margin);
  }
  const double shift = 1.0 + worst;
  s = r;
  for (const auto& run : lp_) s.segment(run.offset, run.dim).array() += shift;
  for (const auto& sc : socs_) s(sc.offset) += shift;
}

bool HsdSolver::update_scalings() {
  for (const auto& run : lp_) {
    for (Index r = run.offset; r < run.offset + run.dim; ++r) {
      if (!(s_(r) > 0.0) || !(z_(r) > 0.0)) return false;
      lp_v_(r) = s_(r) / z_(r);
    }
  }
  for (auto& sc : socs_) {
    const auto s_blk = s_.segment(sc.offset, sc.dim);
    const auto z_blk = z_.segment(sc.offset, sc.dim);
    const double sres = s_blk(0) * s_blk(0) - s_blk.tail(sc.dim - 1).squaredNorm();
    const double zres = z_blk(0) * z_blk(0) - z_blk.tail(sc.dim - 1).squaredNorm();
    if (!(sres > 0.0) || !(zres > 0.0)) return false;

    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    const Vec sbar = s_blk / snorm;
    const Vec zbar = z_blk / znorm;
    sc.eta_sq = snorm / znorm;

    double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    sc.a = (0.5 / gamma) * (sbar(0) + zbar(0));
    sc.q = (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
    if (!std::isfinite(sc.a) || !sc.q.allFinite()) return false;
  }
  scale(z_, lambda_);
  return true;
}

// lambda = W z with the current Nesterov-Todd scaling.
void HsdSolver::scale(const Vec& z, Vec& out) const {
  out.resize(m_);
  for (const auto& run : lp_) {
    out.segment(run.offset, run.dim) =
        lp_v_.segment(run.offset, run.dim).cwiseSqrt().cwiseProduct(
            z.segment(run.offset, run.dim));
  }
  for (const auto& sc : socs_) {
    const auto z_blk = z.segment(sc.offset, sc.dim);
    const double eta = std::sqrt(sc.eta_sq);
    const double zeta = sc.q.dot(z_blk.tail(sc.dim - 1));
    const double factor = z_blk(0) + zeta / (1.0 + sc.a);
    out(sc.offset) = eta * (sc.a * z_blk(0) + zeta);
    out.segment(sc.offset + 1, sc.dim - 1) =
        eta * (z_blk.tail(sc.dim - 1) + factor * sc.q);
  }
}

void HsdSolver::conic_product(const Vec& u, const Vec& v, Vec& out) const {
  out.resize(m_);
  for (const auto& run : lp_) {
    out.segment(run.offset, run.dim) =
        u.segment(run.offset, run.dim).cwiseProduct(v.segment(run.offset, run.dim));
  }
  for (const auto& sc : socs_) {
    const auto u_blk = u.segment(sc.offset, sc.dim);
    const auto v_blk = v.segment(sc.offset, sc.dim);
    out(sc.offset) = u_blk.dot(v_blk);
    out.segment(sc.offset + 1, sc.dim - 1) =
        u_blk(0) * v_blk.tail(sc.dim - 1) + v_blk(0) * u_blk.tail(sc.dim - 1);
  }
}

void HsdSolver::conic_division(const Vec& u, const Vec& w, Vec& out) const {
  out.resize(m_);
  for (const auto& run : lp_) {
    out.segment(run.offset, run.dim) =
        w.segment(run.offset, run.dim).cwiseQuotient(u.segment(run.offset, run.dim));
  }
  for (const auto& sc : socs_) {
    const auto u_blk = u.segment(sc.offset, sc.dim);
    const auto w_blk = w.segment(sc.offset, sc.dim);
    const double rho = u_blk(0) * u_blk(0) - u_blk.tail(sc.dim - 1).squaredNorm();
    const double zeta = u_blk.tail(sc.dim - 1).dot(w_blk.tail(sc.dim - 1));
    const double factor = (zeta / u_blk(0) - w_blk(0)) / rho;
    out(sc.offset) = (u_blk(0) * w_blk(0) - zeta) / rho;
    out.segment(sc.offset + 1, sc.dim - 1) =
        factor * u_blk.tail(sc.dim - 1) + w_blk.tail(sc.dim - 1) / u_blk(0);
  }
}

// Largest step alpha with lambda + alpha*ds and lambda + alpha*dz still in
// the cone (all in scaled space), also respecting tau and kappa positivity.
double HsdSolver::max_step(const Vec& ds_scaled, const Vec& dz_scaled, double dtau,
                           double dkap) const {
  double alpha = 10.0;
  for (const auto& run : lp_) {
    for (Index r = run.offset; r < run.offset + run.dim; ++r) {
      const double rho = ds_scaled(r) / lambda_(r);
      const double sig = dz_scaled(r) / lambda_(r);
      const double worst = std::min(rho, sig);
      if (worst < 0.0) alpha = std::min(alpha, -1.0 / worst);
    }
  }
  if (dtau < 0.0) alpha = std::min(alpha, -tau_ / dtau);
  if (dkap < 0.0) alpha = std::min(alpha, -kap_ / dkap);

  for (const auto& sc : socs_) {
    const auto lk = lambda_.segment(sc.offset, sc.dim);
    const double lknorm2 = lk(0) * lk(0) - lk.tail(sc.dim - 1).squaredNorm();
    if (lknorm2 <= 0.0) continue;
    const double lknorm = std::sqrt(lknorm2);
    const Vec lkbar = lk / lknorm;

    auto block_step = [&](const Vec& d) {
      const auto d_blk = d.segment(sc.offset, sc.dim);
      const double lkbar_dot =
          lkbar(0) * d_blk(0) - lkbar.tail(sc.dim - 1).dot(d_blk.tail(sc.dim - 1));
      const double factor = (lkbar_dot + d_blk(0)) / (lkbar(0) + 1.0);
      const Vec tail =
          (d_blk.tail(sc.dim - 1) - factor * lkbar.tail(sc.dim - 1)) / lknorm;
      return tail.norm() - lkbar_dot / lknorm;
    };
    const double worst = std::max({0.0, block_step(ds_scaled), block_step(dz_scaled)});
    if (worst > 0.0) alpha = std::min(alpha, 1.0 / worst);
  }
  return std::clamp(alpha, kStepMin, kStepMax);
}

void HsdSolver::compute_residuals() {
  rx_ = -(gt_ * z_);
  if (p_ > 0) rx_ -= at_ * y_;
  hresx_ = rx_.norm();
  rx_ -= tau_ * c_;

  if (p_ > 0) {
    ry_ = a_ * x_;
    hresy_ = ry_.norm();
    ry_ -= tau_ * b_;
  } else {
    ry_.resize(0);
    hresy_ = 0.0;
  }

  rz_ = s_ + g_ * x_;
  hresz_ = rz_.norm();
  rz_ -= tau_ * h_;

  cx_ = c_.dot(x_);
  by_ = p_ > 0 ? b_.dot(y_) : 0.0;
  hz_ = h_.dot(z_);
  rt_ = kap_ + cx_ + by_ + hz_;

  gap_ = s_.dot(z_);
  mu_ = (gap_ + kap_ * tau_) / static_cast<double>(degree_ + 1);

  const double nx = x_.norm(), ny = y_.norm(), nz = z_.norm(), ns = s_.norm();
  const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx, 1.0) : 0.0;
  const double nrz = rz_.norm() / std::max(resz0_ + nx + ns, 1.0);
  pres_ = std::max(nry, nrz) / tau_;
  dres_ = rx_.norm() / std::max(resx0_ + ny + nz, 1.0) / tau_;

  pinfres_ = -1.0;
  dinfres_ = -1.0;
  if ((hz_ + by_) / std::max(ny + nz, 1.0) < -settings_.feas_tol) {
    pinfres_ = hresx_ / std::max(ny + nz, 1.0);
  }
  if (cx_ / std::max(nx, 1.0) < -settings_.feas_tol) {
    dinfres_ = std::max(hresy_ / std::max(nx, 1.0), hresz_ / std::max(nx + ns, 1.0));
  }
}

ConicSolution HsdSolver::current_solution() const {
  ConicSolution sol;
  sol.x = x_.cwiseQuotient(x_equil_) / tau_;
  sol.y = p_ > 0 ? Vec(y_.cwiseQuotient(a_equil_) / tau_) : Vec(0);
  sol.z = z_.cwiseQuotient(g_equil_) / tau_;
  sol.s = s_.cwiseProduct(g_equil_) / tau_;
  for (const auto& rb : rotated_) {
    soc_to_rotated_slack(sol.s.segment(rb.offset, rb.dim));
    soc_to_rotated_dual(sol.z.segment(rb.offset, rb.dim));
  }
  return sol;
}

void HsdSolver::external_residuals(const ConicProgram& p, ConicSolution& sol) {
  const double cx = p.c.dot(sol.x);
  const double by = p.num_eq() > 0 ? p.eq_rhs.dot(sol.y) : 0.0;
  const double hz = p.ineq_rhs.dot(sol.z);
  sol.primal_objective = cx;
  sol.relative_gap = std::abs(cx + by + hz) / (1.0 + std::abs(cx));

  double eq_res = 0.0;
  if (p.num_eq() > 0) {
    eq_res = (p.eq * sol.x - p.eq_rhs).norm() / (1.0 + p.eq_rhs.norm());
  }
  const double cone_res =
      (p.ineq * sol.x + sol.s - p.ineq_rhs).norm() / (1.0 + p.ineq_rhs.norm());
  sol.primal_residual = std::max(eq_res, cone_res);

  Vec dual = p.c + p.ineq.transpose() * sol.z;
  if (p.num_eq() > 0) dual += p.eq.transpose() * sol.y;
  sol.dual_residual = dual.norm() / (1.0 + p.c.norm());
}

bool HsdSolver::externally_optimal(const ConicSolution& sol) const {
  return sol.primal_residual <= settings_.feas_tol && sol.dual_residual <= settings_.feas_tol &&
         sol.relative_gap <= settings_.gap_tol && sol.x.allFinite() && sol.s.allFinite() &&
         sol.z.allFinite() && (p_ == 0 || sol.y.allFinite());
}

// Certificate of primal infeasibility: eq' y + ineq' z ~ 0 with z in the
// dual cone and eq_rhs' y + ineq_rhs' z = -1.
bool HsdSolver::primal_infeasibility_certificate(ConicSolution& sol) const {
  Vec y = p_ > 0 ? Vec(y_.cwiseQuotient(a_equil_)) : Vec(0);
  Vec z = z_.cwiseQuotient(g_equil_);
  Vec z_orig = z;
  for (const auto& rb : rotated_) soc_to_rotated_dual(z_orig.segment(rb.offset, rb.dim));

  const double by = p_ > 0 ? original_.eq_rhs.dot(y) : 0.0;
  const double offset = by + original_.ineq_rhs.dot(z_orig);
  if (!(offset < 0.0)) return false;
  y /= -offset;
  z_orig /= -offset;

  Vec res = original_.ineq.transpose() * z_orig;
  if (p_ > 0) res += original_.eq.transpose() * y;
  const double denom = std::max(1.0, y.norm() + z_orig.norm());
  if (res.norm() / denom > settings_.feas_tol) return false;

  sol = ConicSolution();
  sol.status = SolveStatus::PrimalInfeasible;
  sol.x = Vec::Zero(n_);
  sol.s = Vec::Zero(m_);
  sol.y = y;
  sol.z = z_orig;
  sol.dual_residual = res.norm() / denom;
  return true;
}

// Certificate of dual infeasibility (primal unboundedness): eq x = 0,
// ineq x + s = 0 with s in the cone and c' x = -1.
bool HsdSolver::dual_infeasibility_certificate(ConicSolution& sol) const {
  Vec x = x_.cwiseQuotient(x_equil_);
  const double cx = original_.c.dot(x);
  if (!(cx < 0.0)) return false;
  x /= -cx;

  Vec s = s_.cwiseProduct(g_equil_) / (-cx);
  for (const auto& rb : rotated_) soc_to_rotated_slack(s.segment(rb.offset, rb.dim));

  const double denom = std::max(1.0, x.norm());
  const double eq_res = p_ > 0 ? (original_.eq * x).norm() / denom : 0.0;
  const double cone_res = (original_.ineq * x + s).norm() / std::max(1.0, x.norm() + s.norm());
  if (std::max(eq_res, cone_res) > settings_.feas_tol) return false;

  sol = ConicSolution();
  sol.status = SolveStatus::DualInfeasible;
  sol.x = x;
  sol.s = s;
  sol.y = Vec::Zero(p_);
  sol.z = Vec::Zero(m_);
  sol.primal_residual = std::max(eq_res, cone_res);
  return true;
}

ConicSolution HsdSolver::run() {
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };
  auto finish = [&](ConicSolution sol, int iters) {
    sol.iterations = iters;
    sol.wall_time_s = elapsed();
    return sol;
  };

  ConicSolution failure;
  failure.status = SolveStatus::NumericalError;
  failure.x = Vec::Zero(n_);
  failure.y = Vec::Zero(p_);
  failure.z = Vec::Zero(m_);
  failure.s = Vec::Zero(m_);

  if (!factorize()) return finish(failure, 0);

  // Initial point: x from min ||Gx - h|| s.t. Ax = b, s from the slack of
  // that point pushed into the cone; (y, z) from the least-norm dual point.
  Vec rhs = Vec::Zero(n_ + p_ + m_);
  rhs.segment(n_, p_) = b_;
  rhs.tail(m_) = h_;
  Vec dx1(n_), dy1(p_), dz1(m_);
  solve_kkt(rhs, dx1, dy1, dz1);
  x_ = dx1;
  bring_to_cone(-dz1, s_);

  Vec rhs2 = Vec::Zero(n_ + p_ + m_);
  rhs2.head(n_) = -c_;
  Vec dx2(n_), dy2(p_), dz2(m_);
  solve_kkt(rhs2, dx2, dy2, dz2);
  y_ = dy2;
  bring_to_cone(dz2, z_);

  if (!x_.allFinite() || !s_.allFinite() || !y_.allFinite() || !z_.allFinite()) {
    return finish(failure, 0);
  }

  tau_ = 1.0;
  kap_ = 1.0;
  lambda_.resize(m_);

  // rhs for the direction component shared by every iteration
  rhs.head(n_) = -c_;

  ConicSolution best;
  double best_merit = std::numeric_limits<double>::max();
  double pres_prev = std::numeric_limits<double>::max();
  double step = 0.0;

  int iter = 0;
  for (iter = 0; iter <= settings_.max_iterations; ++iter) {
    compute_residuals();

    ConicSolution candidate = current_solution();
    external_residuals(original_, candidate);
    candidate.status = SolveStatus::Optimal;

    if (settings_.verbosity > 0) {
      std::printf(
          "%3d  pcost %+.6e  gap %.3e  pres %.3e  dres %.3e  k/t %.3e  mu %.3e  step %.4f\n",
          iter, candidate.primal_objective, candidate.relative_gap, candidate.primal_residual,
          candidate.dual_residual, kap_ / tau_, mu_, step);
    }

    if (externally_optimal(candidate)) return finish(candidate, iter);

    const double merit = std::max({candidate.primal_residual, candidate.dual_residual,
                                   candidate.relative_gap});
    if (std::isfinite(merit) && merit < best_merit) {
      best_merit = merit;
      best = candidate;
    }

    // Infeasibility detection from the homogeneous embedding.
    if (pinfres_ >= 0.0 && pinfres_ < settings_.feas_tol && tau_ < kap_) {
      ConicSolution cert;
      if (primal_infeasibility_certificate(cert)) return finish(cert, iter);
    }
    if (dinfres_ >= 0.0 && dinfres_ < settings_.feas_tol && tau_ < kap_) {
      ConicSolution cert;
      if (dual_infeasibility_certificate(cert)) return finish(cert, iter);
    }

    // Stalls and blow-ups: return the best iterate seen, honestly labelled.
    const bool blown_up = iter > 0 && (pres_ > kResidualBlowup * pres_prev || gap_ < 0.0);
    const bool stalled = iter > 0 && step <= kStepMin * kStepBackoff;
    const bool out_of_iterations = iter == settings_.max_iterations;
    if (blown_up || stalled || out_of_iterations || !std::isfinite(mu_)) {
      if (best_merit < std::numeric_limits<double>::max() && externally_optimal(best)) {
        return finish(best, iter);
      }
      best.status = out_of_iterations ? SolveStatus::IterationLimit : SolveStatus::NumericalError;
      if (best_merit == std::numeric_limits<double>::max()) {
        failure.status = best.status;
        return finish(failure, iter);
      }
      return finish(best, iter);
    }
    pres_prev = pres_;

    if (!update_scalings()) {
      best.status = SolveStatus::NumericalError;
      return finish(best, iter);
    }
    update_kkt_values();
    if (!factorize()) {
      best.status = SolveStatus::NumericalError;
      return finish(best, iter);
    }

    // Direction component from the static rhs [-c; b; h].
    solve_kkt(rhs, dx1, dy1, dz1);
    const double dtau_denom = kap_ / tau_ - c_.dot(dx1) - b_.dot(dy1) - h_.dot(dz1);

    // Affine (predictor) direction.
    Vec rhs_aff(n_ + p_ + m_);
    rhs_aff.head(n_) = rx_;
    rhs_aff.segment(n_, p_) = -ry_;
    rhs_aff.tail(m_) = s_ - rz_;
    solve_kkt(rhs_aff, dx2, dy2, dz2);

    const double dtau_aff =
        (rt_ - kap_ + c_.dot(dx2) + b_.dot(dy2) + h_.dot(dz2)) / dtau_denom;
    Vec dz_aff = dz2 + dtau_aff * dz1;
    Vec w_dz_aff(m_);
    scale(dz_aff, w_dz_aff);
    Vec ds_aff_by_w = -w_dz_aff - lambda_;
    const double dkap_aff = -kap_ - kap_ / tau_ * dtau_aff;

    const double step_aff = max_step(ds_aff_by_w, w_dz_aff, dtau_aff, dkap_aff);
    const double sigma =
        std::clamp(std::pow(1.0 - step_aff, 3.0), kSigmaMin, kSigmaMax);

    // Combined (corrector) direction with Mehrotra second-order terms.
    Vec ds_comb(m_), cross(m_);
    conic_product(lambda_, lambda_, ds_comb);
    conic_product(ds_aff_by_w, w_dz_aff, cross);
    ds_comb += cross;
    const double sigma_mu = sigma * mu_;
    for (const auto& run : lp_) {
      ds_comb.segment(run.offset, run.dim).array() -= sigma_mu;
    }
    for (const auto& sc : socs_) ds_comb(sc.offset) -= sigma_mu;

    Vec lambda_div(m_), w_lambda_div(m_);
    conic_division(lambda_, ds_comb, lambda_div);
    scale(lambda_div, w_lambda_div);

    const double one_minus_sigma = 1.0 - sigma;
    Vec rhs_comb(n_ + p_ + m_);
    rhs_comb.head(n_) = one_minus_sigma * rx_;
    rhs_comb.segment(n_, p_) = -one_minus_sigma * ry_;
    rhs_comb.tail(m_) = -one_minus_sigma * rz_ + w_lambda_div;
    solve_kkt(rhs_comb, dx2, dy2, dz2);

    const double bkap = kap_ * tau_ + dkap_aff * dtau_aff - sigma_mu;
    const double dtau = (one_minus_sigma * rt_ - bkap / tau_ + c_.dot(dx2) + b_.dot(dy2) +
                         h_.dot(dz2)) /
                        dtau_denom;
    dx2 += dtau * dx1;
    dy2 += dtau * dy1;
    dz2 += dtau * dz1;

    Vec w_dz(m_);
    scale(dz2, w_dz);
    Vec ds_by_w = -(lambda_div + w_dz);
    const double dkap = -(bkap + kap_ * dtau) / tau_;

    step = kStepBackoff * max_step(ds_by_w, w_dz, dtau, dkap);

    Vec ds(m_);
    scale(ds_by_w, ds);

    x_ += step * dx2;
    y_ += step * dy2;
    z_ += step * dz2;
    s_ += step * ds;
    kap_ += step * dkap;
    tau_ += step * dtau;
  }

  best.status = SolveStatus::IterationLimit;
  return finish(best, iter);
}

}  // namespace

ConicSolution solve(const ConicProgram& program, const SolverSettings& settings) {
  program.validate();
  settings.validate();
  HsdSolver solver(program, settings);
  return solver.run();
}

}  // namespace railconic
