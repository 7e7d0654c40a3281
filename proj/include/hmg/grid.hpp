/// @file grid.hpp
/// @brief Lexicographic grid shapes, node fields and the sparse operator type.
///
/// Grids are vertex-centered. A level with `cells` cells per axis has
/// cells+1 nodes; the outermost nodes carry homogeneous Dirichlet values and
/// are eliminated, so the unknowns are the cells-1 interior nodes per axis.
/// Ordering is row-major with the last axis fastest.

#pragma once

#include <Eigen/Sparse>

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmg/stencil.hpp"

namespace hmg {

using Vec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor, std::ptrdiff_t>;
using Triplet = Eigen::Triplet<cplx, std::ptrdiff_t>;

struct GridShape {
  int dim = 1;
  std::array<int, 3> n{1, 1, 1};

  GridShape() = default;
  GridShape(int d, std::array<int, 3> counts) : dim(d), n(counts) {
    if (d < 1 || d > 3) throw std::invalid_argument("GridShape: dim must be 1, 2 or 3");
    for (int a = 0; a < 3; ++a) {
      if (a >= d) n[a] = 1;
      if (n[a] < 1) throw std::invalid_argument("GridShape: empty axis");
    }
  }

  size_t size() const { return static_cast<size_t>(n[0]) * n[1] * n[2]; }

  bool inside(const Offset& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < 0 || p[a] >= n[a]) return false;
    return true;
  }

  std::ptrdiff_t index(const Offset& p) const {
    return (static_cast<std::ptrdiff_t>(p[0]) * n[1] + p[1]) * n[2] + p[2];
  }

  Offset coords(std::ptrdiff_t idx) const {
    Offset p;
    p[2] = static_cast<int>(idx % n[2]);
    idx /= n[2];
    p[1] = static_cast<int>(idx % n[1]);
    p[0] = static_cast<int>(idx / n[1]);
    return p;
  }

  template <class F>
  void for_each(F&& f) const {
    std::ptrdiff_t k = 0;
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j)
        for (int l = 0; l < n[2]; ++l) f(Offset{i, j, l}, k++);
  }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Cell counts of a vertex-centered level.
struct CellGrid {
  int dim = 1;
  std::array<int, 3> cells{0, 0, 0};

  GridShape nodes() const {
    std::array<int, 3> c{1, 1, 1};
    for (int a = 0; a < dim; ++a) c[a] = cells[a] + 1;
    return GridShape(dim, c);
  }
  GridShape unknowns() const {
    std::array<int, 3> c{1, 1, 1};
    for (int a = 0; a < dim; ++a) c[a] = cells[a] - 1;
    return GridShape(dim, c);
  }
  CellGrid coarsened() const {
    CellGrid g{dim, cells};
    for (int a = 0; a < dim; ++a) {
      if (cells[a] % 2 != 0)
        throw std::invalid_argument("CellGrid: odd cell count " + std::to_string(cells[a]) +
                                    " cannot be halved");
      g.cells[a] = cells[a] / 2;
    }
    return g;
  }
  /// Node coordinate of an unknown.
  Offset node_of(const Offset& unknown) const {
    Offset p = unknown;
    for (int a = 0; a < dim; ++a) p[a] += 1;
    return p;
  }
  friend bool operator==(const CellGrid&, const CellGrid&) = default;
};

/// Real scalar field sampled at the nodes of a vertex-centered level.
struct NodeField {
  GridShape shape;
  std::vector<double> values;

  NodeField() = default;
  NodeField(GridShape s, double fill = 0.0) : shape(s), values(s.size(), fill) {}

  double& at(const Offset& p) { return values[static_cast<size_t>(shape.index(p))]; }
  double at(const Offset& p) const { return values[static_cast<size_t>(shape.index(p))]; }
};

/// Injection to the next coarser vertex grid (coarse node J = fine node 2J).
inline NodeField inject(const NodeField& fine) {
  std::array<int, 3> c{1, 1, 1};
  for (int a = 0; a < fine.shape.dim; ++a) {
    if ((fine.shape.n[a] - 1) % 2 != 0) throw std::invalid_argument("inject: odd cell count");
    c[a] = (fine.shape.n[a] - 1) / 2 + 1;
  }
  NodeField out(GridShape(fine.shape.dim, c));
  out.shape.for_each([&](const Offset& p, std::ptrdiff_t k) {
    Offset q = p;
    for (int a = 0; a < fine.shape.dim; ++a) q[a] *= 2;
    out.values[static_cast<size_t>(k)] = fine.at(q);
  });
  return out;
}

/// Square complex sparse matrix over the unknowns of one level.
struct SparseOperator {
  SpMat matrix;
  CellGrid grid;
  double h = 1.0;

  std::ptrdiff_t rows() const { return matrix.rows(); }
  Vec apply(const Vec& x) const { return matrix * x; }

  /// Row stencil at an unknown, read off the matrix (offsets in unknown space).
  Stencil row_stencil(const Offset& at, int half) const {
    const GridShape s = grid.unknowns();
    Offset hh{0, 0, 0};
    for (int a = 0; a < grid.dim; ++a) hh[a] = half;
    Stencil out(grid.dim, hh);
    const std::ptrdiff_t row = s.index(at);
    for (SpMat::InnerIterator it(matrix, row); it; ++it) {
      const Offset q = s.coords(it.col());
      const Offset o{q[0] - at[0], q[1] - at[1], q[2] - at[2]};
      if (!out.contains(o)) throw std::runtime_error("row_stencil: entry outside requested half-width");
      out.at(o) = it.value();
    }
    return out;
  }
};

}  // namespace hmg
