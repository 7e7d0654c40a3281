// Explicit sparse triple product on a periodic grid, used as an independent
// check of stencil-level Galerkin composition.

#pragma once

#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <vector>

#include "hmg/stencil.hpp"

namespace oracle {

using hmg::cplx;
using hmg::Offset;
using hmg::Stencil;
using Mat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class WraparoundError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct PeriodicGrid {
  int dim;
  int n;  // points per axis

  int size() const {
    int s = 1;
    for (int a = 0; a < dim; ++a) s *= n;
    return s;
  }
  int wrap(int i) const { return ((i % n) + n) % n; }
  int index(const Offset& p) const {
    int k = 0;
    for (int a = 0; a < dim; ++a) k = k * n + wrap(p[a]);
    return k;
  }
  Offset coords(int k) const {
    Offset p{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      p[a] = k % n;
      k /= n;
    }
    return p;
  }
};

inline Offset add(Offset a, const Offset& b, int scale_a = 1) {
  for (int i = 0; i < 3; ++i) a[i] = scale_a * a[i] + b[i];
  return a;
}

/// Circulant operator: (A u)_i = sum_o s[o] u_{i+o}.
inline Mat operator_matrix(const PeriodicGrid& g, const Stencil& s) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (int k = 0; k < g.size(); ++k) {
    const Offset p = g.coords(k);
    s.for_each([&](const Offset& o, cplx c) {
      if (c != cplx{0.0}) t.emplace_back(k, g.index(add(p, o)), c);
    });
  }
  Mat m(g.size(), g.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Restriction rows: R_{J, 2J+o} = r[o].
inline Mat restriction_matrix(const PeriodicGrid& fine, const Stencil& r) {
  const PeriodicGrid coarse{fine.dim, fine.n / 2};
  std::vector<Eigen::Triplet<cplx>> t;
  for (int K = 0; K < coarse.size(); ++K) {
    const Offset J = coarse.coords(K);
    r.for_each([&](const Offset& o, cplx c) {
      if (c != cplx{0.0}) t.emplace_back(K, fine.index(add(J, o, 2)), c);
    });
  }
  Mat m(coarse.size(), fine.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Prolongation columns: P_{2K+o, K} = p[o].
inline Mat prolongation_matrix(const PeriodicGrid& fine, const Stencil& p) {
  const PeriodicGrid coarse{fine.dim, fine.n / 2};
  std::vector<Eigen::Triplet<cplx>> t;
  for (int K = 0; K < coarse.size(); ++K) {
    const Offset J = coarse.coords(K);
    p.for_each([&](const Offset& o, cplx c) {
      if (c != cplx{0.0}) t.emplace_back(fine.index(add(J, o, 2)), K, c);
    });
  }
  Mat m(fine.size(), coarse.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Coarse row stencil of R A P read at an interior coarse point of an n-point
/// periodic grid. Throws when the grid is small enough for the product to wrap.
inline Stencil triple_product_stencil(const Stencil& a, const Stencil& r, const Stencil& p, int n) {
  const int dim = a.dim();
  int fine_span = 0, coarse_half = 0;
  for (int ax = 0; ax < dim; ++ax) {
    const int s = a.half(ax) + r.half(ax) + p.half(ax);
    fine_span = std::max(fine_span, s);
    coarse_half = std::max(coarse_half, s / 2);
  }
  const int need = std::max(2 * fine_span + 1, 2 * (2 * coarse_half + 1));
  const int minimum = need + need % 2;
  if (n < minimum || n % 2 != 0)
    throw WraparoundError("periodic oracle grid of " + std::to_string(n) + " points wraps around; need at least " +
                          std::to_string(minimum));
  const PeriodicGrid fine{dim, n}, coarse{dim, n / 2};
  const Mat A = operator_matrix(fine, a);
  const Mat R = restriction_matrix(fine, r);
  const Mat P = prolongation_matrix(fine, p);
  const Mat C = Mat(R * Mat(A * P));
  Offset half{0, 0, 0};
  for (int ax = 0; ax < dim; ++ax) half[ax] = coarse_half;
  Stencil out(dim, half);
  Offset center{0, 0, 0};
  for (int ax = 0; ax < dim; ++ax) center[ax] = coarse.n / 2;
  const int row = coarse.index(center);
  auto lookup = [&](int col) {
    for (Mat::InnerIterator it(C, row); it; ++it)
      if (it.col() == col) return it.value();
    return cplx{0.0};
  };
  out.fill([&](const Offset& o) { return lookup(coarse.index(add(center, o))); });
  return out;
}

}  // namespace oracle
