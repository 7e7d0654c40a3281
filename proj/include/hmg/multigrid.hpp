/// @file multigrid.hpp
/// @brief Three-level geometric multigrid with a real-shifted coarsest
///        Galerkin operator, damped Jacobi smoothing and V/W cycles.
///
/// Level 1 is the assembled fine operator, level 2 its Galerkin projection
/// R1 H P1, and level 3 the double projection R2 (R1 H^alpha P1) P2 of the
/// fine operator re-assembled with wavenumber alpha*k. Level 3 is solved
/// directly with a factorization computed once per hierarchy.

#pragma once

#include <Eigen/SparseLU>

#include <array>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hmg/discretization.hpp"
#include "hmg/grid.hpp"
#include "hmg/stencil.hpp"

namespace hmg {

enum class Intergrid { Cubic, LevelDependent, Linear };
enum class CycleType { V, W };

inline std::string to_string(Intergrid g) {
  switch (g) {
    case Intergrid::Cubic: return "cubic";
    case Intergrid::LevelDependent: return "level-dependent";
    case Intergrid::Linear: return "linear";
  }
  return "?";
}

inline Intergrid parse_intergrid(const std::string& s) {
  if (s == "cubic") return Intergrid::Cubic;
  if (s == "level-dependent" || s == "levdep" || s == "lev-dep") return Intergrid::LevelDependent;
  if (s == "linear" || s == "bilinear") return Intergrid::Linear;
  throw std::invalid_argument("unknown intergrid scheme '" + s + "'");
}

/// Restriction stencils for the 1->2 and 2->3 transfers.
inline std::array<Stencil, 2> restriction_stencils(Intergrid g, int dim) {
  const Stencil cubic = tensor_power(transfer1d::cubic_restriction(), dim);
  const Stencil linear = tensor_power(transfer1d::linear_restriction(), dim);
  switch (g) {
    case Intergrid::Cubic: return {cubic, cubic};
    case Intergrid::LevelDependent: return {cubic, linear};
    case Intergrid::Linear: return {linear, linear};
  }
  return {cubic, cubic};
}

/// Prolongation stencils for the 2->1 and 3->2 transfers. The level-dependent
/// scheme keeps cubic prolongation on both.
inline std::array<Stencil, 2> prolongation_stencils(Intergrid g, int dim) {
  const Stencil cubic = transpose_scale(tensor_power(transfer1d::cubic_restriction(), dim), dim);
  const Stencil linear = transpose_scale(tensor_power(transfer1d::linear_restriction(), dim), dim);
  if (g == Intergrid::Linear) return {linear, linear};
  return {cubic, cubic};
}

/// Restriction matrix fine -> coarse. Rows are truncated at the Dirichlet
/// boundary and renormalized to unit sum.
inline SpMat restriction_matrix(const CellGrid& fine, const Stencil& r) {
  const CellGrid coarse = fine.coarsened();
  const GridShape fu = fine.unknowns(), cu = coarse.unknowns();
  std::vector<Triplet> trips;
  trips.reserve(cu.size() * r.size());
  cu.for_each([&](const Offset& qc, std::ptrdiff_t row) {
    const Offset pc = coarse.node_of(qc);
    const size_t first = trips.size();
    cplx sum{0.0};
    r.for_each([&](const Offset& o, cplx w) {
      if (w == cplx{0.0}) return;
      Offset qf{0, 0, 0};
      for (int a = 0; a < fine.dim; ++a) qf[a] = 2 * pc[a] + o[a] - 1;
      if (!fu.inside(qf)) return;
      trips.emplace_back(row, fu.index(qf), w);
      sum += w;
    });
    for (size_t t = first; t < trips.size(); ++t)
      trips[t] = Triplet(trips[t].row(), trips[t].col(), trips[t].value() / sum);
  });
  SpMat R(static_cast<std::ptrdiff_t>(cu.size()), static_cast<std::ptrdiff_t>(fu.size()));
  R.setFromTriplets(trips.begin(), trips.end());
  return R;
}

/// Prolongation matrix coarse -> fine from interpolation weights p; weights
/// falling on Dirichlet nodes are dropped.
inline SpMat prolongation_matrix(const CellGrid& fine, const Stencil& p) {
  const CellGrid coarse = fine.coarsened();
  const GridShape fu = fine.unknowns(), cu = coarse.unknowns();
  std::vector<Triplet> trips;
  trips.reserve(cu.size() * p.size());
  cu.for_each([&](const Offset& qc, std::ptrdiff_t col) {
    const Offset pc = coarse.node_of(qc);
    p.for_each([&](const Offset& o, cplx w) {
      if (w == cplx{0.0}) return;
      Offset qf{0, 0, 0};
      for (int a = 0; a < fine.dim; ++a) qf[a] = 2 * pc[a] + o[a] - 1;
      if (!fu.inside(qf)) return;
      trips.emplace_back(fu.index(qf), col, w);
    });
  });
  SpMat P(static_cast<std::ptrdiff_t>(fu.size()), static_cast<std::ptrdiff_t>(cu.size()));
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

inline SparseOperator galerkin(const SpMat& R, const SparseOperator& A, const SpMat& P) {
  SparseOperator out;
  out.grid = A.grid.coarsened();
  out.h = 2.0 * A.h;
  const SpMat AP = A.matrix * P;
  out.matrix = R * AP;
  out.matrix.prune(cplx{0.0});
  out.matrix.makeCompressed();
  return out;
}

struct TransferPair {
  SpMat restriction;
  SpMat prolongation;
};

struct CyclePlan {
  CycleType cycle = CycleType::W;
  int nu1 = 1, nu2 = 1;
  Intergrid intergrid = Intergrid::Cubic;
  double alpha = 1.0;
  double beta = 0.0;
  std::array<double, 2> damping{0.89, 0.89};

  /// W(1,1) with the per-dimension damping pair (0.89/0.89 in 2D, 0.6/0.4 in
  /// 3D) and the intergrid scheme used for that dimension.
  static CyclePlan defaults(int dim) {
    CyclePlan p;
    if (dim == 3) {
      p.damping = {0.6, 0.4};
      p.intergrid = Intergrid::LevelDependent;
    }
    return p;
  }

  void validate() const {
    if (nu1 < 0 || nu2 < 0) throw std::invalid_argument("CyclePlan: negative relaxation count");
    if (!(alpha > 0.0)) throw std::invalid_argument("CyclePlan: alpha must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("CyclePlan: beta must be nonnegative");
  }
};

class SingularCoarseOperator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Level {
  SparseOperator op;
  Vec inv_diag;
  double damping = 1.0;
};

inline Vec inverse_diagonal(const SparseOperator& op) {
  Vec d = op.matrix.diagonal();
  for (std::ptrdiff_t i = 0; i < d.size(); ++i) {
    if (d[i] == cplx{0.0})
      throw std::invalid_argument("jacobi: zero diagonal entry at row " + std::to_string(i));
    d[i] = 1.0 / d[i];
  }
  return d;
}

/// x <- x + w D^{-1} (b - H x), repeated `sweeps` times.
inline void jacobi_smooth(const Level& level, Vec& x, const Vec& b, int sweeps) {
  if (x.size() != level.op.rows() || b.size() != level.op.rows())
    throw std::invalid_argument("jacobi_smooth: vector size does not match level");
  for (int s = 0; s < sweeps; ++s) {
    Vec r = b - level.op.matrix * x;
    x.array() += level.damping * level.inv_diag.array() * r.array();
  }
}

class MultigridHierarchy {
 public:
  using ColMat = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
  using Factorization = Eigen::SparseLU<ColMat, Eigen::COLAMDOrdering<int>>;

  MultigridHierarchy(std::array<SparseOperator, 3> ops, std::array<TransferPair, 2> transfers,
                     CyclePlan plan, SparseOperator target)
      : transfers_(std::move(transfers)), plan_(plan), target_(std::move(target)) {
    plan_.validate();
    for (int l = 0; l < 3; ++l) {
      levels_[l].op = std::move(ops[l]);
      if (l < 2) {
        levels_[l].damping = plan_.damping[l];
        levels_[l].inv_diag = inverse_diagonal(levels_[l].op);
      }
    }
    factorize();
  }

  MultigridHierarchy(const MultigridHierarchy&) = delete;
  MultigridHierarchy& operator=(const MultigridHierarchy&) = delete;

  const Level& level(int l) const { return levels_.at(static_cast<size_t>(l)); }
  const TransferPair& transfer(int l) const { return transfers_.at(static_cast<size_t>(l)); }
  const CyclePlan& plan() const { return plan_; }
  /// The system the cycle is meant to solve (unshifted; differs from level 1
  /// only in CSLP mode).
  const SparseOperator& target() const { return target_; }
  std::ptrdiff_t size() const { return levels_[0].op.rows(); }

  Vec coarse_solve(const Vec& rhs) const {
    if (rhs.size() != levels_[2].op.rows()) throw std::invalid_argument("coarse_solve: size mismatch");
    Vec x = lu_->solve(rhs);
    if (lu_->info() != Eigen::Success) throw SingularCoarseOperator("coarse_solve: back-substitution failed");
    return x;
  }

  /// One cycle from initial guess x0.
  Vec cycle(const Vec& b, const Vec& x0) const {
    if (b.size() != size() || x0.size() != size()) throw std::invalid_argument("cycle: size mismatch");
    return cycle_level(0, b, x0);
  }

  /// Preconditioner application: one cycle from a zero initial guess.
  Vec apply(const Vec& b) const { return cycle(b, Vec::Zero(b.size())); }

 private:
  void factorize() {
    ColMat A = levels_[2].op.matrix;
    lu_ = std::make_unique<Factorization>();
    lu_->analyzePattern(A);
    lu_->factorize(A);
    if (lu_->info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "coarse factorization failed (resonant coarsest operator?) with alpha=" << plan_.alpha
          << " beta=" << plan_.beta << ": " << lu_->lastErrorMessage();
      throw SingularCoarseOperator(msg.str());
    }
  }

  Vec cycle_level(int l, const Vec& b, Vec x) const {
    if (l == 2) return coarse_solve(b);
    const Level& lev = levels_[static_cast<size_t>(l)];
    const TransferPair& tr = transfers_[static_cast<size_t>(l)];
    jacobi_smooth(lev, x, b, plan_.nu1);
    const int visits = plan_.cycle == CycleType::W ? 2 : 1;
    const std::ptrdiff_t nc = levels_[static_cast<size_t>(l) + 1].op.rows();
    for (int v = 0; v < visits; ++v) {
      const Vec rc = tr.restriction * (b - lev.op.matrix * x);
      x += tr.prolongation * cycle_level(l + 1, rc, Vec::Zero(nc));
    }
    jacobi_smooth(lev, x, b, plan_.nu2);
    return x;
  }

  std::array<Level, 3> levels_;
  std::array<TransferPair, 2> transfers_;
  CyclePlan plan_;
  SparseOperator target_;
  std::unique_ptr<Factorization> lu_;
};

inline std::array<TransferPair, 2> make_transfers(const CellGrid& fine, Intergrid g) {
  const int dim = fine.dim;
  const auto r = restriction_stencils(g, dim);
  const auto p = prolongation_stencils(g, dim);
  const CellGrid mid = fine.coarsened();
  return {TransferPair{restriction_matrix(fine, r[0]), prolongation_matrix(fine, p[0])},
          TransferPair{restriction_matrix(mid, r[1]), prolongation_matrix(mid, p[1])}};
}

inline void require_two_coarsenings(const CellGrid& g) {
  for (int a = 0; a < g.dim; ++a)
    if (g.cells[a] % 4 != 0 || g.cells[a] / 4 < 4)
      throw std::invalid_argument("build_hierarchy: padded grid needs cells divisible by 4 and at least 16 "
                                  "per axis (3 interior coarsest nodes); axis " +
                                  std::to_string(a) + " has " + std::to_string(g.cells[a]));
}

/// Galerkin hierarchy with the real shift on the coarsest level.
inline std::unique_ptr<MultigridHierarchy> build_hierarchy(const HelmholtzProblem& problem,
                                                           const Scheme& scheme, const CyclePlan& plan) {
  plan.validate();
  const SparseOperator target = assemble_operator(problem, scheme, 1.0, 0.0);
  require_two_coarsenings(target.grid);
  auto transfers = make_transfers(target.grid, plan.intergrid);

  SparseOperator h1 = plan.beta > 0.0 ? assemble_operator(problem, scheme, 1.0, plan.beta) : target;
  SparseOperator h2 = galerkin(transfers[0].restriction, h1, transfers[0].prolongation);
  SparseOperator h3;
  if (plan.alpha == 1.0) {
    h3 = galerkin(transfers[1].restriction, h2, transfers[1].prolongation);
  } else {
    const SparseOperator shifted = assemble_operator(problem, scheme, plan.alpha, plan.beta);
    const SparseOperator mid = galerkin(transfers[0].restriction, shifted, transfers[0].prolongation);
    h3 = galerkin(transfers[1].restriction, mid, transfers[1].prolongation);
  }
  return std::make_unique<MultigridHierarchy>(
      std::array<SparseOperator, 3>{std::move(h1), std::move(h2), std::move(h3)}, std::move(transfers), plan,
      target);
}

/// Re-discretization baseline: fourth-order operators on levels 1 and 2, the
/// G=4 JSS stencil with modified wavenumber on level 3, coefficients injected
/// to the coarse nodes, linear transfers.
inline std::unique_ptr<MultigridHierarchy> build_rediscretization_hierarchy(const HelmholtzProblem& problem,
                                                                            CyclePlan plan) {
  plan.intergrid = Intergrid::Linear;
  plan.validate();
  if (problem.model.dim != 2) throw std::invalid_argument("re-discretization baseline is 2D only");
  check_nyquist(problem);
  const LevelMedium m1 = fine_medium(problem);
  require_two_coarsenings(m1.grid);
  const LevelMedium m2 = m1.coarsened();
  const LevelMedium m3 = m2.coarsened();
  SparseOperator target = assemble_on_level(m1, Scheme::fourth_order(), 1.0, 0.0);
  SparseOperator h1 = plan.beta > 0.0 ? assemble_on_level(m1, Scheme::fourth_order(), 1.0, plan.beta) : target;
  SparseOperator h2 = assemble_on_level(m2, Scheme::fourth_order(), 1.0, plan.beta);
  SparseOperator h3 = assemble_on_level(m3, Scheme::jss_coarse_g4(), 1.0, plan.beta);
  return std::make_unique<MultigridHierarchy>(
      std::array<SparseOperator, 3>{std::move(h1), std::move(h2), std::move(h3)},
      make_transfers(m1.grid, Intergrid::Linear), plan, std::move(target));
}

}  // namespace hmg
