/// @file krylov.hpp
/// @brief Right-preconditioned flexible GMRES and the stationary multigrid
///        driver.

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hmg/grid.hpp"
#include "hmg/multigrid.hpp"

namespace hmg {

struct SolveReport {
  int iterations = 0;
  /// Relative residual norms |b - A x| / |b|, starting with the initial guess.
  std::vector<double> residual_history;
  bool converged = false;
  bool diverged = false;
  double wall_time = 0.0;
  /// Residual implied by the Krylov recurrence at the end, before the final
  /// history entry is replaced by the recomputed |b - A x| / |b|.
  double estimated_residual = 0.0;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

struct FgmresOptions {
  int restart = 0;  // 0: no restart
  double tol = 1e-6;
  int maxit = 100;
};

using LinearMap = std::function<Vec(const Vec&)>;

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Complex Givens rotation zeroing b in (a, b).
inline void givens(cplx a, cplx b, double& c, cplx& s) {
  const double na = std::abs(a), nb = std::abs(b);
  if (nb == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (na == 0.0) {
    c = 0.0;
    s = std::conj(b) / nb;
  } else {
    const double r = std::hypot(na, nb);
    c = na / r;
    s = (a / na) * std::conj(b) / r;
  }
}
}  // namespace detail

/// Flexible GMRES: x = x0 + sum_j z_j y_j with z_j = M(v_j). Iterations count
/// preconditioner applications.
inline std::pair<Vec, SolveReport> fgmres(const LinearMap& apply_A, const LinearMap& apply_M, const Vec& b,
                                          Vec x, const FgmresOptions& opt) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("fgmres: tol must be positive");
  if (opt.maxit < 1) throw std::invalid_argument("fgmres: maxit must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.residual_history = {0.0};
    rep.converged = true;
    return {Vec::Zero(b.size()), rep};
  }
  const int m = opt.restart > 0 ? opt.restart : opt.maxit;

  Vec r = b - apply_A(x);
  double rel = r.norm() / bnorm;
  rep.residual_history.push_back(rel);

  while (rel >= opt.tol && rep.iterations < opt.maxit) {
    const double beta = r.norm();
    std::vector<Vec> V, Z;
    V.push_back(r / beta);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<double> cs(static_cast<size_t>(m));
    std::vector<cplx> sn(static_cast<size_t>(m));
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
    g[0] = beta;
    int j = 0;
    bool breakdown = false;
    for (; j < m && rep.iterations < opt.maxit; ++j) {
      Z.push_back(apply_M(V[static_cast<size_t>(j)]));
      Vec w = apply_A(Z.back());
      const double w0 = w.norm();
      for (int i = 0; i <= j; ++i) {
        const cplx hij = V[static_cast<size_t>(i)].dot(w);
        H(i, j) = hij;
        w -= hij * V[static_cast<size_t>(i)];
      }
      if (w.norm() < w0 / std::sqrt(2.0)) {
        for (int i = 0; i <= j; ++i) {
          const cplx hij = V[static_cast<size_t>(i)].dot(w);
          H(i, j) += hij;
          w -= hij * V[static_cast<size_t>(i)];
        }
      }
      const double hnext = w.norm();
      H(j + 1, j) = hnext;
      for (int i = 0; i < j; ++i) {
        const cplx a = H(i, j), bb = H(i + 1, j);
        H(i, j) = cs[static_cast<size_t>(i)] * a + sn[static_cast<size_t>(i)] * bb;
        H(i + 1, j) = -std::conj(sn[static_cast<size_t>(i)]) * a + cs[static_cast<size_t>(i)] * bb;
      }
      detail::givens(H(j, j), H(j + 1, j), cs[static_cast<size_t>(j)], sn[static_cast<size_t>(j)]);
      const cplx a = H(j, j), bb = H(j + 1, j);
      H(j, j) = cs[static_cast<size_t>(j)] * a + sn[static_cast<size_t>(j)] * bb;
      H(j + 1, j) = 0.0;
      g[j + 1] = -std::conj(sn[static_cast<size_t>(j)]) * g[j];
      g[j] = cs[static_cast<size_t>(j)] * g[j];
      ++rep.iterations;
      rel = std::abs(g[j + 1]) / bnorm;
      rep.residual_history.push_back(rel);
      // Lucky breakdown (exact solution in the subspace) or collapse of the
      // new direction after reorthogonalization.
      if (hnext <= 1e-14 * std::max(w0, beta)) {
        breakdown = true;
        ++j;
        break;
      }
      if (rel < opt.tol) {
        ++j;
        break;
      }
      V.push_back(w / hnext);
    }
    // Back substitution on the j x j triangle.
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H(i, k) * y[k];
      y[i] = s / H(i, i);
    }
    for (int i = 0; i < j; ++i) x += y[i] * Z[static_cast<size_t>(i)];
    rep.estimated_residual = rep.residual_history.back();
    r = b - apply_A(x);
    rel = r.norm() / bnorm;
    rep.residual_history.back() = rel;
    if (breakdown && rel >= opt.tol && j == 1) break;  // stagnation: nothing more to gain
  }
  rep.converged = rel < opt.tol;
  rep.wall_time = detail::seconds_since(t0);
  return {x, rep};
}

inline std::pair<Vec, SolveReport> fgmres(const SparseOperator& A, const MultigridHierarchy* M, const Vec& b,
                                          const FgmresOptions& opt) {
  LinearMap a = [&](const Vec& v) -> Vec { return A.matrix * v; };
  LinearMap p = M ? LinearMap([M](const Vec& v) -> Vec { return M->apply(v); })
                  : LinearMap([](const Vec& v) -> Vec { return v; });
  return fgmres(a, p, b, Vec::Zero(b.size()), opt);
}

struct StationaryOptions {
  double tol = 1e-6;
  int maxit = 100;
  double divergence_factor = 10.0;
};

/// x <- x + cycle(b - H x) on the hierarchy's target operator until the
/// relative residual drops below tol. Flags divergence when the residual
/// grows by divergence_factor over its running minimum.
inline std::pair<Vec, SolveReport> stationary_solve(const MultigridHierarchy& mg, const Vec& b,
                                                    const StationaryOptions& opt,
                                                    std::optional<Vec> x0 = std::nullopt) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("stationary_solve: tol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const SpMat& A = mg.target().matrix;
  Vec x = x0 ? *x0 : Vec::Zero(b.size());
  SolveReport rep;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.residual_history = {0.0};
    rep.converged = true;
    return {Vec::Zero(b.size()), rep};
  }
  Vec r = b - A * x;
  double rel = r.norm() / bnorm;
  double best = rel;
  rep.residual_history.push_back(rel);
  while (rel >= opt.tol && rep.iterations < opt.maxit) {
    x += mg.apply(r);
    r = b - A * x;
    rel = r.norm() / bnorm;
    ++rep.iterations;
    rep.residual_history.push_back(rel);
    best = std::min(best, rel);
    if (!std::isfinite(rel) || rel >= opt.divergence_factor * best) {
      rep.diverged = true;
      break;
    }
  }
  rep.converged = rel < opt.tol;
  rep.wall_time = detail::seconds_since(t0);
  return {x, rep};
}

/// Geometric-mean residual reduction over the last `window` steps.
inline double convergence_factor(const std::vector<double>& history, int window = 5) {
  const int n = static_cast<int>(history.size());
  if (n < 2) return 0.0;
  const int w = std::min(window, n - 1);
  const double a = history[static_cast<size_t>(n - 1 - w)], z = history.back();
  if (a <= 0.0) return 0.0;
  return std::pow(z / a, 1.0 / w);
}

}  // namespace hmg
