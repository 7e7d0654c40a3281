/// @file discretization.hpp
/// @brief Fine-grid Helmholtz operators: schemes, slowness models, sponge
///        layers, point sources.
///
/// The continuous problem is -Lap p - k^2 p = q with k = omega * kappa.
/// The discrete operator on spacing h is
///
///   H = (1/h^2) L - sum_o M[o] c(x + o h),
///   c = f^2 omega^2 kappa^2 (alpha^2 (1 + i gamma) + i beta),
///
/// where (L, M) are the dimensionless stencils of the scheme, f the scheme's
/// wavenumber factor, gamma the sponge attenuation, alpha the real shift and
/// beta the relative complex shift. Absorption shows up as a negative
/// imaginary diagonal.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmg/grid.hpp"
#include "hmg/stencil.hpp"

namespace hmg {

enum class SchemeKind { SecondOrder, FourthOrder, Jss };

struct Scheme {
  SchemeKind kind = SchemeKind::FourthOrder;
  double a = 0.0, b = 0.0, c = 0.0;  // JSS weights
  double wavenumber_factor = 1.0;

  static Scheme second_order() { return {SchemeKind::SecondOrder}; }
  static Scheme fourth_order() { return {SchemeKind::FourthOrder}; }
  static Scheme jss(double a, double b, double c, double wavenumber_factor = 1.0) {
    return {SchemeKind::Jss, a, b, c, wavenumber_factor};
  }
  /// Dispersion-minimizing weights for G > 4.
  static Scheme jss_optimal() { return jss(0.5461, 0.6248, 0.37524); }
  /// Coarse-level weights for G = 4 with modified wavenumber k* = 0.87725 k.
  static Scheme jss_coarse_g4() { return jss(0.6054, 1.0532, 0.0002, 0.87725); }

  std::string name() const {
    switch (kind) {
      case SchemeKind::SecondOrder: return "second-order";
      case SchemeKind::FourthOrder: return "fourth-order";
      case SchemeKind::Jss: return "jss";
    }
    return "?";
  }
};

struct StencilPair {
  Stencil laplacian;  // dimensionless, scaled by 1/h^2 at assembly
  Stencil mass;       // dimensionless, scaled by k^2 at assembly
};

inline StencilPair laplacian_and_mass_stencils(int dim, const Scheme& scheme) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("laplacian_and_mass_stencils: bad dim");
  Offset h{0, 0, 0};
  for (int a = 0; a < dim; ++a) h[a] = 1;
  Stencil lap(dim, h), mass(dim, h);
  auto nnz = [](const Offset& o) { return (o[0] != 0) + (o[1] != 0) + (o[2] != 0); };

  switch (scheme.kind) {
    case SchemeKind::SecondOrder:
      lap.at({0, 0, 0}) = 2.0 * dim;
      for (int a = 0; a < dim; ++a)
        for (int s : {-1, 1}) {
          Offset o{0, 0, 0};
          o[a] = s;
          lap.at(o) = -1.0;
        }
      mass.at({0, 0, 0}) = 1.0;
      break;

    case SchemeKind::FourthOrder:
      if (dim == 1) {
        // Numerov: (1/h^2)[-1 2 -1] - k^2 (1/12)[1 10 1]
        lap = Stencil::from_1d({-1.0, 2.0, -1.0});
        mass = Stencil::from_1d({1 / 12.0, 10 / 12.0, 1 / 12.0});
      } else if (dim == 2) {
        lap.fill([&](const Offset& o) -> cplx {
          switch (nnz(o)) {
            case 0: return 20.0 / 6.0;
            case 1: return -4.0 / 6.0;
            default: return -1.0 / 6.0;
          }
        });
        mass.fill([&](const Offset& o) -> cplx {
          switch (nnz(o)) {
            case 0: return 8.0 / 12.0;
            case 1: return 1.0 / 12.0;
            default: return 0.0;
          }
        });
      } else {
        lap.fill([&](const Offset& o) -> cplx {
          switch (nnz(o)) {
            case 0: return 4.0;
            case 1: return -2.0 / 6.0;
            case 2: return -1.0 / 6.0;
            default: return 0.0;
          }
        });
        mass.fill([&](const Offset& o) -> cplx {
          switch (nnz(o)) {
            case 0: return 6.0 / 12.0;
            case 1: return 1.0 / 12.0;
            default: return 0.0;
          }
        });
      }
      break;

    case SchemeKind::Jss: {
      if (dim != 2) throw std::invalid_argument("laplacian_and_mass_stencils: JSS weights exist only in 2D");
      const double a = scheme.a, b = scheme.b, c = scheme.c;
      lap.fill([&](const Offset& o) -> cplx {
        switch (nnz(o)) {
          case 0: return 4.0 * a + 2.0 * (1.0 - a);
          case 1: return -a;
          default: return -(1.0 - a) / 2.0;
        }
      });
      mass.fill([&](const Offset& o) -> cplx {
        switch (nnz(o)) {
          case 0: return b;
          case 1: return c / 4.0;
          default: return (1.0 - b - c) / 4.0;
        }
      });
      break;
    }
  }
  return {lap, mass};
}

/// Helmholtz row stencil at constant k: (1/h^2) L - (f alpha k)^2 M, with h = 1
/// and the argument being the dimensionless kh.
inline Stencil helmholtz_stencil(int dim, const Scheme& scheme, double kh, double alpha = 1.0) {
  const auto [lap, mass] = laplacian_and_mass_stencils(dim, scheme);
  const double kk = scheme.wavenumber_factor * alpha * kh;
  return lap - cplx(kk * kk) * mass;
}

// ---------------------------------------------------------------------------
// Slowness models

enum class ModelKind { Homogeneous, Linear, Wedge };

struct SlownessModel {
  int dim = 2;
  std::array<int, 3> cells{0, 0, 0};
  double h = 1.0;
  NodeField kappa2;  // squared slowness at the cells+1 nodes per axis

  CellGrid grid() const { return {dim, cells}; }
  double max_kappa2() const { return *std::max_element(kappa2.values.begin(), kappa2.values.end()); }
  double min_kappa2() const { return *std::min_element(kappa2.values.begin(), kappa2.values.end()); }

  void validate() const {
    if (kappa2.shape != grid().nodes())
      throw std::invalid_argument("SlownessModel: kappa2 shape does not match cells+1 nodes");
    for (double v : kappa2.values)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("SlownessModel: kappa2 must be positive and finite");
    if (!(h > 0.0)) throw std::invalid_argument("SlownessModel: spacing must be positive");
  }
};

/// Depth is the last axis; node 0 is the top.
inline SlownessModel make_model(ModelKind kind, double lo, double hi, int dim,
                                std::array<int, 3> cells, double h) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw std::invalid_argument("make_model: kappa2 range must satisfy 0 < lo <= hi");
  SlownessModel m;
  m.dim = dim;
  m.h = h;
  for (int a = 0; a < 3; ++a) m.cells[a] = a < dim ? cells[a] : 0;
  for (int a = 0; a < dim; ++a)
    if (m.cells[a] < 1) throw std::invalid_argument("make_model: need at least one cell per axis");
  m.kappa2 = NodeField(m.grid().nodes());
  const int depth_axis = dim - 1;
  const int nz = m.cells[depth_axis];
  const int nx = dim > 1 ? m.cells[0] : 1;
  const double mid = 0.5 * (lo + hi);
  m.kappa2.shape.for_each([&](const Offset& p, std::ptrdiff_t k) {
    const double t = nz > 0 ? static_cast<double>(p[depth_axis]) / nz : 0.0;
    double v = hi;
    switch (kind) {
      case ModelKind::Homogeneous: v = hi; break;
      case ModelKind::Linear: {
        const double kap = std::sqrt(lo) + (std::sqrt(hi) - std::sqrt(lo)) * t;
        v = kap * kap;
        break;
      }
      case ModelKind::Wedge: {
        // Two straight interfaces converging to the right: a dipping top
        // interface and a rising bottom one bound the middle wedge.
        const double s = dim > 1 ? static_cast<double>(p[0]) / nx : 0.0;
        const double upper = 0.3 + 0.2 * s;
        const double lower = 0.75 - 0.15 * s;
        v = t < upper ? lo : (t < lower ? mid : hi);
        break;
      }
    }
    m.kappa2.values[static_cast<size_t>(k)] = v;
  });
  return m;
}

enum class ValueKind { Velocity, Slowness, SlownessSquared };

struct ModelMeta {
  int dim = 2;
  std::array<int, 3> shape{1, 1, 1};  // nodes per axis in the file
  double h = 1.0;
  ValueKind kind = ValueKind::Velocity;
};

/// Raw little-endian float32, row-major with the last axis fastest.
inline SlownessModel load_model(const std::string& path, const ModelMeta& meta) {
  GridShape shape(meta.dim, meta.shape);
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  const auto bytes = static_cast<std::uintmax_t>(in.tellg());
  const std::uintmax_t expected = shape.size() * sizeof(float);
  if (bytes != expected)
    throw std::runtime_error("load_model: " + path + " holds " + std::to_string(bytes) +
                             " bytes, metadata expects " + std::to_string(expected));
  in.seekg(0);
  std::vector<unsigned char> raw(static_cast<size_t>(bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));

  SlownessModel m;
  m.dim = meta.dim;
  m.h = meta.h;
  for (int a = 0; a < meta.dim; ++a) {
    if (meta.shape[a] < 2) throw std::invalid_argument("load_model: need at least 2 nodes per axis");
    m.cells[a] = meta.shape[a] - 1;
  }
  m.kappa2 = NodeField(shape);
  for (size_t i = 0; i < shape.size(); ++i) {
    const unsigned char* b = &raw[i * 4];
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    const double v = f;
    double k2 = v;
    switch (meta.kind) {
      case ValueKind::Velocity: k2 = 1.0 / (v * v); break;
      case ValueKind::Slowness: k2 = v * v; break;
      case ValueKind::SlownessSquared: k2 = v; break;
    }
    m.kappa2.values[i] = k2;
  }
  m.validate();
  return m;
}

/// Append `extra` node layers below the model by replicating the bottom layer.
inline SlownessModel extend_down(const SlownessModel& m, int extra) {
  if (extra < 0) throw std::invalid_argument("extend_down: negative extension");
  SlownessModel out = m;
  const int za = m.dim - 1;
  out.cells[za] += extra;
  out.kappa2 = NodeField(out.grid().nodes());
  out.kappa2.shape.for_each([&](const Offset& p, std::ptrdiff_t k) {
    Offset q = p;
    q[za] = std::min(q[za], m.cells[za]);
    out.kappa2.values[static_cast<size_t>(k)] = m.kappa2.at(q);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Problem definition

struct HelmholtzProblem {
  SlownessModel model;
  double omega = 1.0;
  int pad = 20;
  double gamma_max = 1.0;
  Offset source{0, 0, 0};  // model node index
  bool free_surface_top = false;

  /// Points per wavelength at the largest wavenumber.
  double points_per_wavelength() const {
    return 2.0 * std::numbers::pi / (omega * std::sqrt(model.max_kappa2()) * model.h);
  }
};

/// Source at the middle of the model.
inline Offset center_source(const SlownessModel& m) {
  Offset s{0, 0, 0};
  for (int a = 0; a < m.dim; ++a) s[a] = m.cells[a] / 2;
  return s;
}

/// Source at the center of the top face (first interior node below it).
inline Offset top_source(const SlownessModel& m) {
  Offset s = center_source(m);
  s[m.dim - 1] = 1;
  return s;
}

/// Unit-domain convention: omega chosen so the fastest-varying region has G
/// points per wavelength.
inline HelmholtzProblem make_problem(SlownessModel model, double G, int pad = 20,
                                     bool top_source_location = false) {
  if (!(G > 0.0)) throw std::invalid_argument("make_problem: G must be positive");
  model.validate();
  HelmholtzProblem p;
  p.omega = 2.0 * std::numbers::pi / (G * model.h * std::sqrt(model.max_kappa2()));
  p.pad = pad;
  p.source = top_source_location ? top_source(model) : center_source(model);
  p.model = std::move(model);
  return p;
}

/// Extents of the padded computational grid. The far-side pads are widened
/// so every axis has a cell count divisible by 4 (two halvings).
struct PaddedLayout {
  CellGrid grid;
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};

  Offset model_node(const Offset& node, const SlownessModel& m) const {
    Offset q{0, 0, 0};
    for (int a = 0; a < m.dim; ++a) q[a] = std::clamp(node[a] - lo[a], 0, m.cells[a]);
    return q;
  }
};

inline PaddedLayout padded_layout(const HelmholtzProblem& problem) {
  if (problem.pad < 0) throw std::invalid_argument("HelmholtzProblem: pad must be >= 0");
  const auto& m = problem.model;
  PaddedLayout L;
  L.grid.dim = m.dim;
  for (int a = 0; a < m.dim; ++a) {
    const bool top = (a == m.dim - 1) && problem.free_surface_top;
    L.lo[a] = top ? 0 : problem.pad;
    L.hi[a] = problem.pad;
    int total = m.cells[a] + L.lo[a] + L.hi[a];
    const int round = (4 - total % 4) % 4;
    L.hi[a] += round;
    L.grid.cells[a] = total + round;
  }
  return L;
}

/// Sponge attenuation gamma on the padded nodes: quadratic ramp in the depth t
/// into each pad, summed over axes and clamped to gamma_max.
inline NodeField attenuation_profile(const HelmholtzProblem& problem) {
  const PaddedLayout L = padded_layout(problem);
  NodeField g(L.grid.nodes());
  if (problem.pad == 0) return g;
  const int dim = L.grid.dim;
  g.shape.for_each([&](const Offset& p, std::ptrdiff_t k) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      double t = 0.0;
      if (L.lo[a] > 0 && p[a] < L.lo[a]) t = static_cast<double>(L.lo[a] - p[a]) / L.lo[a];
      const int inner_hi = L.grid.cells[a] - L.hi[a];
      if (L.hi[a] > 0 && p[a] > inner_hi) t = static_cast<double>(p[a] - inner_hi) / L.hi[a];
      s += problem.gamma_max * t * t;
    }
    g.values[static_cast<size_t>(k)] = std::min(problem.gamma_max, s);
  });
  return g;
}

/// kappa2 on the padded nodes (edge replication into the pads).
inline NodeField padded_kappa2(const HelmholtzProblem& problem) {
  const PaddedLayout L = padded_layout(problem);
  NodeField out(L.grid.nodes());
  out.shape.for_each([&](const Offset& p, std::ptrdiff_t k) {
    out.values[static_cast<size_t>(k)] = problem.model.kappa2.at(L.model_node(p, problem.model));
  });
  return out;
}

/// Medium on one vertex level: spacing, frequency and per-node coefficients.
struct LevelMedium {
  CellGrid grid;
  double h = 1.0;
  double omega = 1.0;
  NodeField kappa2;
  NodeField gamma;

  LevelMedium coarsened() const {
    return {grid.coarsened(), 2.0 * h, omega, inject(kappa2), inject(gamma)};
  }
};

inline LevelMedium fine_medium(const HelmholtzProblem& problem) {
  problem.model.validate();
  return {padded_layout(problem).grid, problem.model.h, problem.omega, padded_kappa2(problem),
          attenuation_profile(problem)};
}

/// Assemble H = (1/h^2) L - M c on the interior unknowns of one level.
inline SparseOperator assemble_on_level(const LevelMedium& med, const Scheme& scheme, double alpha,
                                        double beta) {
  if (!(alpha > 0.0)) throw std::invalid_argument("assemble: alpha must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("assemble: beta must be nonnegative");
  const int dim = med.grid.dim;
  const auto [lap, mass] = laplacian_and_mass_stencils(dim, scheme);
  const GridShape unk = med.grid.unknowns();
  const GridShape nodes = med.grid.nodes();
  const double inv_h2 = 1.0 / (med.h * med.h);
  const double f2w2 = scheme.wavenumber_factor * scheme.wavenumber_factor * med.omega * med.omega;
  const double a2 = alpha * alpha;

  for (double v : med.kappa2.values)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("assemble: kappa2 must be positive");

  std::vector<Triplet> trips;
  trips.reserve(unk.size() * lap.size());
  unk.for_each([&](const Offset& q, std::ptrdiff_t row) {
    const Offset p = med.grid.node_of(q);
    lap.for_each([&](const Offset& o, cplx lc) {
      const cplx mc = mass.at(o);
      if (lc == cplx{0.0} && mc == cplx{0.0}) return;
      const Offset qn{q[0] + o[0], q[1] + o[1], q[2] + o[2]};
      if (!unk.inside(qn)) return;  // Dirichlet neighbour
      const Offset pn{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
      const size_t ni = static_cast<size_t>(nodes.index(pn));
      const double k2 = f2w2 * med.kappa2.values[ni];
      const cplx c = k2 * cplx(a2, a2 * med.gamma.values[ni] + beta);
      trips.emplace_back(row, unk.index(qn), lc * inv_h2 - mc * c);
    });
  });
  SparseOperator op;
  op.grid = med.grid;
  op.h = med.h;
  op.matrix.resize(static_cast<std::ptrdiff_t>(unk.size()), static_cast<std::ptrdiff_t>(unk.size()));
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.matrix.makeCompressed();
  return op;
}

inline void check_nyquist(const HelmholtzProblem& problem) {
  const double G = problem.points_per_wavelength();
  if (!(G >= 2.0))
    throw std::invalid_argument("assemble: " + std::to_string(G) +
                                " points per wavelength violates the Nyquist limit (G >= 2)");
}

/// Fine operator -Lap_h - (alpha k)^2 (1 + i gamma) M_h - i beta k^2 M_h.
inline SparseOperator assemble_operator(const HelmholtzProblem& problem, const Scheme& scheme,
                                        double alpha = 1.0, double beta = 0.0) {
  check_nyquist(problem);
  return assemble_on_level(fine_medium(problem), scheme, alpha, beta);
}

/// Discrete delta of weight 1/h^dim at the source node.
inline Vec point_source(const HelmholtzProblem& problem) {
  const PaddedLayout L = padded_layout(problem);
  const auto& m = problem.model;
  for (int a = 0; a < m.dim; ++a)
    if (problem.source[a] < 0 || problem.source[a] > m.cells[a])
      throw std::invalid_argument("point_source: source outside the model");
  Offset unknown{0, 0, 0};
  for (int a = 0; a < m.dim; ++a) unknown[a] = problem.source[a] + L.lo[a] - 1;
  const GridShape unk = L.grid.unknowns();
  if (!unk.inside(unknown)) throw std::invalid_argument("point_source: source on a Dirichlet boundary");
  Vec b = Vec::Zero(static_cast<std::ptrdiff_t>(unk.size()));
  b[unk.index(unknown)] = std::pow(m.h, -m.dim);
  return b;
}

}  // namespace hmg
