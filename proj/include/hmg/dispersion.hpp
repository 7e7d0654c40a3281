/// @file dispersion.hpp
/// @brief Grid-to-grid dispersion analysis and real-shift tuning.
///
/// The dispersion relation of a stencil is the zero set of its symbol. Along
/// a ray theta = r u the first sign change of the symbol gives the discrete
/// radius r(u). The grid-to-grid error compares the coarsest Galerkin operator
/// of a 3-level hierarchy with the fine operator stretched by 4:
///
///   e_g(alpha, u) = r_3(alpha, u) / (4 r_1(u)) - 1,
///
/// and the tuned shift minimizes max_u |e_g(alpha, u)| by exhaustive search.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmg/discretization.hpp"
#include "hmg/multigrid.hpp"
#include "hmg/stencil.hpp"

namespace hmg {

class NoCrossingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the sign change on a sampled ray becomes a radius.
enum class RadiusMode {
  Sampled,  // first sample past the sign change
  Refined,  // bisection inside the bracketing sample interval
};

inline std::string to_string(RadiusMode m) { return m == RadiusMode::Sampled ? "sampled" : "refined"; }
inline RadiusMode parse_radius_mode(const std::string& s) {
  if (s == "sampled") return RadiusMode::Sampled;
  if (s == "refined") return RadiusMode::Refined;
  throw std::invalid_argument("unknown radius mode '" + s + "'");
}

/// Propagation direction: a unit vector plus the angles it came from.
struct Direction {
  std::array<double, 3> u{1.0, 0.0, 0.0};
  double azimuth = 0.0;
  double polar = std::numbers::pi / 2;

  static Direction planar(double phi) { return {{std::cos(phi), std::sin(phi), 0.0}, phi, std::numbers::pi / 2}; }
  static Direction spatial(double azimuth, double polar) {
    return {{std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)},
            azimuth,
            polar};
  }
  static Direction axis1d() { return {{1.0, 0.0, 0.0}, 0.0, std::numbers::pi / 2}; }
};

/// Evaluates the real symbol of a stencil along rays. Stencils that are even
/// in every axis are folded to sum_{o >= 0} w_o prod_a cos(o_a theta_a) with
/// the cosines generated by the Chebyshev recurrence.
class RaySymbol {
 public:
  explicit RaySymbol(const Stencil& s) : dim_(s.dim()), half_(s.half()) {
    folded_ = axis_symmetric(s);
    if (folded_) {
      const int e1 = half_[1] + 1, e2 = half_[2] + 1;
      weights_.assign(static_cast<size_t>(half_[0] + 1) * e1 * e2, 0.0);
      for (int i = 0; i <= half_[0]; ++i)
        for (int j = 0; j <= half_[1]; ++j)
          for (int l = 0; l <= half_[2]; ++l) {
            const int flips = (i != 0) + (j != 0) + (l != 0);
            weights_[(static_cast<size_t>(i) * e1 + j) * e2 + l] = s.at({i, j, l}).real() * std::ldexp(1.0, flips);
          }
    } else {
      s.for_each([&](const Offset& o, cplx c) {
        if (c != cplx{0.0}) terms_.push_back({o, c});
      });
    }
  }

  double operator()(const std::array<double, 3>& theta) const {
    if (!folded_) {
      cplx acc{0.0};
      for (const auto& t : terms_) {
        const double ph = t.o[0] * theta[0] + t.o[1] * theta[1] + t.o[2] * theta[2];
        acc += t.c * cplx(std::cos(ph), std::sin(ph));
      }
      return acc.real();
    }
    std::array<std::array<double, 8>, 3> cosines{};
    for (int a = 0; a < 3; ++a) {
      auto& c = cosines[static_cast<size_t>(a)];
      c[0] = 1.0;
      if (half_[a] == 0) continue;
      const double c1 = std::cos(theta[static_cast<size_t>(a)]);
      c[1] = c1;
      for (int n = 2; n <= half_[a]; ++n) c[static_cast<size_t>(n)] = 2.0 * c1 * c[static_cast<size_t>(n - 1)] - c[static_cast<size_t>(n - 2)];
    }
    const int e1 = half_[1] + 1, e2 = half_[2] + 1;
    double acc = 0.0;
    size_t k = 0;
    for (int i = 0; i <= half_[0]; ++i) {
      const double ci = cosines[0][static_cast<size_t>(i)];
      for (int j = 0; j < e1; ++j) {
        const double cij = ci * cosines[1][static_cast<size_t>(j)];
        for (int l = 0; l < e2; ++l) acc += weights_[k++] * cij * cosines[2][static_cast<size_t>(l)];
      }
    }
    return acc;
  }

  double along(const Direction& d, double r) const {
    return (*this)({r * d.u[0], r * d.u[1], r * d.u[2]});
  }

 private:
  static bool axis_symmetric(const Stencil& s) {
    if (s.half(0) > 7 || s.half(1) > 7 || s.half(2) > 7) return false;
    const double scale = std::max(s.max_abs(), 1e-300);
    bool ok = true;
    s.for_each([&](const Offset& o, cplx c) {
      if (std::abs(c.imag()) > 1e-14 * scale) ok = false;
      for (int a = 0; a < 3 && ok; ++a) {
        Offset m = o;
        m[a] = -m[a];
        if (std::abs(s.at(m) - c) > 1e-14 * scale) ok = false;
      }
    });
    return ok;
  }

  struct Term {
    Offset o;
    cplx c;
  };
  int dim_;
  Offset half_;
  bool folded_ = false;
  std::vector<double> weights_;
  std::vector<Term> terms_;
};

/// Largest ray parameter keeping theta inside [-pi, pi]^d.
inline double ray_limit(const Direction& d, int dim) {
  double m = 0.0;
  for (int a = 0; a < dim; ++a) m = std::max(m, std::abs(d.u[static_cast<size_t>(a)]));
  return std::numbers::pi / m;
}

/// Distance from the origin to the first sign change of the symbol along d,
/// scanning r = j * resolution.
inline double discrete_radius(const RaySymbol& sym, int dim, const Direction& d, double resolution,
                              RadiusMode mode = RadiusMode::Refined) {
  if (!(resolution > 0.0)) throw std::invalid_argument("discrete_radius: resolution must be positive");
  const double s0 = sym.along(d, 0.0);
  if (!(s0 < 0.0))
    throw NoCrossingError("discrete_radius: symbol at the origin is not negative (no dispersion-relation crossing)");
  const double rmax = ray_limit(d, dim);
  double prev_r = 0.0, prev_v = s0;
  for (long j = 1;; ++j) {
    const double r = static_cast<double>(j) * resolution;
    if (r > rmax + 1e-12) break;
    const double v = sym.along(d, r);
    if (v >= 0.0) {
      if (mode == RadiusMode::Sampled) return r;
      double a = prev_r, b = r, fa = prev_v;
      while (b - a > 1e-12) {
        const double mid = 0.5 * (a + b);
        const double fm = sym.along(d, mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    prev_r = r;
    prev_v = v;
  }
  throw NoCrossingError("discrete_radius: no dispersion-relation crossing on the ray");
}

inline double discrete_radius(const Stencil& s, const Direction& d, double resolution,
                              RadiusMode mode = RadiusMode::Refined) {
  return discrete_radius(RaySymbol(s), s.dim(), d, resolution, mode);
}

struct AnalysisConfig {
  int dim = 2;
  double G = 12.0;
  Intergrid intergrid = Intergrid::Cubic;
  Scheme scheme = Scheme::fourth_order();
  double phi_resolution = 0.1;
  double alpha_resolution = 5e-4;
  double ray_resolution = 1e-3;
  double alpha_lo = 0.98, alpha_hi = 1.06;
  RadiusMode radius_mode = RadiusMode::Sampled;

  double kh() const { return 2.0 * std::numbers::pi / G; }

  void validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("AnalysisConfig: dim must be 1, 2 or 3");
    if (!(G > 8.0)) throw std::invalid_argument("AnalysisConfig: G must exceed 8 so that G/4 > 2");
    if (!(phi_resolution > 0.0) || !(alpha_resolution > 0.0) || !(ray_resolution > 0.0))
      throw std::invalid_argument("AnalysisConfig: resolutions must be positive");
    if (!(alpha_lo > 0.0) || !(alpha_hi >= alpha_lo))
      throw std::invalid_argument("AnalysisConfig: invalid alpha range");
  }

  /// Symmetry sector of propagation directions.
  std::vector<Direction> directions() const {
    std::vector<Direction> out;
    const double quarter = std::numbers::pi / 4 + 1e-12;
    if (dim == 1) {
      out.push_back(Direction::axis1d());
    } else if (dim == 2) {
      for (int i = 0; i * phi_resolution <= quarter; ++i) out.push_back(Direction::planar(i * phi_resolution));
    } else {
      const double polar_lo = std::numbers::pi / 2 - std::acos(1.0 / std::sqrt(3.0));
      for (int i = 0; i * phi_resolution <= quarter; ++i)
        for (int j = 0; polar_lo + j * phi_resolution <= std::numbers::pi / 2 + 1e-12; ++j)
          out.push_back(Direction::spatial(i * phi_resolution, polar_lo + j * phi_resolution));
    }
    return out;
  }

  std::vector<double> alphas() const {
    std::vector<double> out;
    const long n = std::lround((alpha_hi - alpha_lo) / alpha_resolution);
    for (long i = 0; i <= n; ++i) out.push_back(alpha_lo + static_cast<double>(i) * alpha_resolution);
    return out;
  }
};

/// Double-Galerkin stencils of the Laplacian and mass parts, so that the
/// coarsest stencil at shift alpha is lap - (alpha kh)^2 mass.
struct CoarsestStencils {
  Stencil fine_laplacian, fine_mass;
  Stencil laplacian, mass;

  static CoarsestStencils build(const AnalysisConfig& cfg) {
    const auto [lap, mass] = laplacian_and_mass_stencils(cfg.dim, cfg.scheme);
    const auto r = restriction_stencils(cfg.intergrid, cfg.dim);
    const auto p = prolongation_stencils(cfg.intergrid, cfg.dim);
    auto twice = [&](const Stencil& s) { return galerkin_stencil(galerkin_stencil(s, r[0], p[0]), r[1], p[1]); };
    return {lap, mass, twice(lap), twice(mass)};
  }

  double mass_factor(const AnalysisConfig& cfg, double alpha) const {
    const double k = cfg.scheme.wavenumber_factor * alpha * cfg.kh();
    return k * k;
  }
  Stencil fine(const AnalysisConfig& cfg) const { return fine_laplacian - cplx(mass_factor(cfg, 1.0)) * fine_mass; }
  Stencil coarsest(const AnalysisConfig& cfg, double alpha) const {
    return laplacian - cplx(mass_factor(cfg, alpha)) * mass;
  }
};

/// Effective stencil of the real-shifted coarsest Galerkin operator, in units
/// where the fine spacing is 1.
inline Stencil coarsest_stencil(const AnalysisConfig& cfg, double alpha) {
  return CoarsestStencils::build(cfg).coarsest(cfg, alpha);
}

/// Fine radii r_1 per direction.
inline std::vector<double> fine_radii(const AnalysisConfig& cfg, const std::vector<Direction>& dirs,
                                      const CoarsestStencils& cs) {
  const RaySymbol fine(cs.fine(cfg));
  std::vector<double> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(discrete_radius(fine, cfg.dim, d, cfg.ray_resolution, cfg.radius_mode));
  return out;
}

inline double grid_to_grid_error(const AnalysisConfig& cfg, double alpha, const Direction& d) {
  cfg.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("grid_to_grid_error: alpha must be positive");
  const auto cs = CoarsestStencils::build(cfg);
  const double r1 = discrete_radius(RaySymbol(cs.fine(cfg)), cfg.dim, d, cfg.ray_resolution, cfg.radius_mode);
  const double r3 =
      discrete_radius(RaySymbol(cs.coarsest(cfg, alpha)), cfg.dim, d, cfg.ray_resolution, cfg.radius_mode);
  return r3 / (4.0 * r1) - 1.0;
}

inline double grid_to_grid_error(const AnalysisConfig& cfg, double alpha, double phi) {
  return grid_to_grid_error(cfg, alpha, cfg.dim == 1 ? Direction::axis1d() : Direction::planar(phi));
}

struct DispersionScan {
  std::vector<Direction> directions;
  std::vector<double> alphas;
  std::vector<std::vector<double>> eg;  // [alpha][direction], signed
  std::vector<double> objective;        // max_direction |eg|
  double alpha_star = 0.0;
  double max_eg_star = 0.0;
  size_t star_index = 0;
};

/// Scan every alpha in the configured grid; ties resolve toward smaller alpha.
inline DispersionScan scan_shifts(const AnalysisConfig& cfg) {
  cfg.validate();
  DispersionScan scan;
  scan.directions = cfg.directions();
  scan.alphas = cfg.alphas();
  const auto cs = CoarsestStencils::build(cfg);
  const auto r1 = fine_radii(cfg, scan.directions, cs);
  scan.max_eg_star = std::numeric_limits<double>::infinity();
  for (size_t ia = 0; ia < scan.alphas.size(); ++ia) {
    const RaySymbol coarse(cs.coarsest(cfg, scan.alphas[ia]));
    std::vector<double> row;
    row.reserve(scan.directions.size());
    double worst = 0.0;
    for (size_t id = 0; id < scan.directions.size(); ++id) {
      const double r3 = discrete_radius(coarse, cfg.dim, scan.directions[id], cfg.ray_resolution, cfg.radius_mode);
      const double e = r3 / (4.0 * r1[id]) - 1.0;
      row.push_back(e);
      worst = std::max(worst, std::abs(e));
    }
    scan.eg.push_back(std::move(row));
    scan.objective.push_back(worst);
    if (worst < scan.max_eg_star) {
      scan.max_eg_star = worst;
      scan.alpha_star = scan.alphas[ia];
      scan.star_index = ia;
    }
  }
  return scan;
}

struct ShiftOptimum {
  double alpha_star;
  double max_eg;
  DispersionScan scan;
};

inline ShiftOptimum optimize_shift(const AnalysisConfig& cfg) {
  DispersionScan scan = scan_shifts(cfg);
  return {scan.alpha_star, scan.max_eg_star, std::move(scan)};
}

/// Rule-of-thumb bounds G/(4e) <= n_crit <= G/(2e), rounded half up.
inline std::pair<long, long> ncrit_bounds(double G, double max_eg) {
  if (!(max_eg > 0.0)) throw std::invalid_argument("ncrit_bounds: error must be positive");
  return {std::lround(std::floor(G / (4.0 * max_eg) + 0.5)), std::lround(std::floor(G / (2.0 * max_eg) + 0.5))};
}

/// e_d = r / r_1 - 1 with r = 2 pi / G, for a stencil built at kh = 2 pi / G.
inline double classical_dispersion_error(const Stencil& stencil, double G, const Direction& d,
                                         double ray_resolution = 1e-3, RadiusMode mode = RadiusMode::Refined) {
  if (!(G > 2.0)) throw std::invalid_argument("classical_dispersion_error: G must exceed 2");
  const double r1 = discrete_radius(stencil, d, ray_resolution, mode);
  return (2.0 * std::numbers::pi / G) / r1 - 1.0;
}

struct CurvePoint {
  double phi;
  double polar;
  double r_coarse;
  double r_fine_stretched;
};

/// Dense polar dispersion curves for plotting: full circle in 2D, full sphere
/// grid in 3D, at the given angular resolution.
inline std::vector<CurvePoint> export_dispersion_curve(const AnalysisConfig& cfg, double alpha,
                                                       double resolution = 0.01) {
  cfg.validate();
  if (!(resolution > 0.0)) throw std::invalid_argument("export_dispersion_curve: resolution must be positive");
  const auto cs = CoarsestStencils::build(cfg);
  const RaySymbol fine(cs.fine(cfg)), coarse(cs.coarsest(cfg, alpha));
  std::vector<CurvePoint> out;
  auto add = [&](const Direction& d) {
    const double r1 = discrete_radius(fine, cfg.dim, d, cfg.ray_resolution, cfg.radius_mode);
    const double r3 = discrete_radius(coarse, cfg.dim, d, cfg.ray_resolution, cfg.radius_mode);
    out.push_back({d.azimuth, d.polar, r3, 4.0 * r1});
  };
  const double two_pi = 2.0 * std::numbers::pi;
  if (cfg.dim == 1) {
    add(Direction::axis1d());
  } else if (cfg.dim == 2) {
    for (int i = 0; i * resolution < two_pi - 1e-12; ++i) add(Direction::planar(i * resolution));
  } else {
    for (int j = 0; j * resolution <= std::numbers::pi + 1e-12; ++j)
      for (int i = 0; i * resolution < two_pi - 1e-12; ++i) add(Direction::spatial(i * resolution, j * resolution));
  }
  return out;
}

}  // namespace hmg
