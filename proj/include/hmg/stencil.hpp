/// @file stencil.hpp
/// @brief Constant-coefficient stencil algebra: storage, Fourier symbols,
///        tensor products and stride-2 Galerkin composition.
///
/// A stencil is a centered tensor of complex coefficients with odd extent per
/// axis. Coefficients are dimensionless; grid-spacing and wavenumber scalings
/// are applied when an operator is assembled. Unused axes (for dim < 3) carry
/// half-extent 0, so every loop runs over three axes.
///
/// Convention: a stencil s acting as a row operator means
///   (A u)_i = sum_o s[o] u_{i+o}.
/// Its symbol is sum_o s[o] exp(i o.theta).

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmg {

using cplx = std::complex<double>;
using Offset = std::array<int, 3>;

class Stencil {
 public:
  Stencil() : Stencil(1, {0, 0, 0}) {}

  /// Zero stencil with the given half-extent per axis (extent = 2*half+1).
  Stencil(int dim, Offset half) : dim_(dim), half_(half) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("Stencil: dim must be 1, 2 or 3");
    for (int a = 0; a < 3; ++a) {
      if (half_[a] < 0) throw std::invalid_argument("Stencil: negative half-extent");
      if (a >= dim && half_[a] != 0)
        throw std::invalid_argument("Stencil: unused axis must have extent 1");
    }
    coeffs_.assign(static_cast<size_t>(extent(0)) * extent(1) * extent(2), cplx{0.0});
  }

  /// 1D stencil from a coefficient list of odd length.
  static Stencil from_1d(std::span<const double> values) {
    if (values.size() % 2 == 0) throw std::invalid_argument("Stencil: extent must be odd");
    const int h = static_cast<int>(values.size() / 2);
    Stencil s(1, {h, 0, 0});
    for (int i = -h; i <= h; ++i) s.at({i, 0, 0}) = values[static_cast<size_t>(i + h)];
    return s;
  }
  static Stencil from_1d(std::initializer_list<double> values) {
    return from_1d(std::span<const double>(values.begin(), values.size()));
  }

  /// 2D stencil from a square row-major array, first index = axis 0.
  static Stencil from_2d(int n, std::span<const double> values) {
    if (n % 2 == 0 || values.size() != static_cast<size_t>(n) * n)
      throw std::invalid_argument("Stencil: 2D data must be n*n with odd n");
    const int h = n / 2;
    Stencil s(2, {h, h, 0});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s.at({i - h, j - h, 0}) = values[static_cast<size_t>(i) * n + j];
    return s;
  }

  /// Identity (single unit coefficient at the center).
  static Stencil identity(int dim) {
    Stencil s(dim, {0, 0, 0});
    s.at({0, 0, 0}) = 1.0;
    return s;
  }

  int dim() const { return dim_; }
  int half(int axis) const { return half_[static_cast<size_t>(axis)]; }
  const Offset& half() const { return half_; }
  int extent(int axis) const { return 2 * half_[static_cast<size_t>(axis)] + 1; }
  size_t size() const { return coeffs_.size(); }

  bool contains(const Offset& o) const {
    for (int a = 0; a < 3; ++a)
      if (std::abs(o[a]) > half_[a]) return false;
    return true;
  }

  cplx& at(const Offset& o) { return coeffs_[index(o)]; }
  const cplx& at(const Offset& o) const { return coeffs_[index(o)]; }
  /// Coefficient at offset, zero outside the support.
  cplx get(const Offset& o) const { return contains(o) ? coeffs_[index(o)] : cplx{0.0}; }

  std::span<const cplx> coeffs() const { return coeffs_; }

  /// Visit every (offset, coefficient) pair in lexicographic order.
  template <class F>
  void for_each(F&& f) const {
    size_t k = 0;
    for (int i = -half_[0]; i <= half_[0]; ++i)
      for (int j = -half_[1]; j <= half_[1]; ++j)
        for (int l = -half_[2]; l <= half_[2]; ++l) f(Offset{i, j, l}, coeffs_[k++]);
  }

  /// Set every coefficient to f(offset).
  template <class F>
  void fill(F&& f) {
    for_each_mut([&](const Offset& o, cplx& c) { c = f(o); });
  }

  bool is_finite() const {
    for (const auto& c : coeffs_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  }

  cplx sum() const {
    cplx s{0.0};
    for (const auto& c : coeffs_) s += c;
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Smallest centered box containing every coefficient with |c| > tol.
  Offset support_half(double tol = 0.0) const {
    Offset h{0, 0, 0};
    for_each([&](const Offset& o, cplx c) {
      if (std::abs(c) > tol)
        for (int a = 0; a < 3; ++a) h[a] = std::max(h[a], std::abs(o[a]));
    });
    return h;
  }

  /// Copy with coefficients outside the given half-extent dropped (or zero
  /// padding when growing).
  Stencil resized(const Offset& new_half) const {
    Stencil out(dim_, new_half);
    out.for_each_mut([&](const Offset& o, cplx& c) { c = get(o); });
    return out;
  }

  /// Remove zero borders (|c| <= tol).
  Stencil trimmed(double tol = 0.0) const { return resized(support_half(tol)); }

  Stencil& operator*=(cplx a) {
    for (auto& c : coeffs_) c *= a;
    return *this;
  }
  friend Stencil operator*(cplx a, Stencil s) { return s *= a; }
  friend Stencil operator*(Stencil s, cplx a) { return s *= a; }

  friend Stencil operator+(const Stencil& x, const Stencil& y) { return combine(x, y, 1.0); }
  friend Stencil operator-(const Stencil& x, const Stencil& y) { return combine(x, y, -1.0); }

 private:
  size_t index(const Offset& o) const {
    if (!contains(o)) throw std::out_of_range("Stencil: offset outside support");
    return (static_cast<size_t>(o[0] + half_[0]) * extent(1) + static_cast<size_t>(o[1] + half_[1])) *
               extent(2) +
           static_cast<size_t>(o[2] + half_[2]);
  }

  template <class F>
  void for_each_mut(F&& f) {
    size_t k = 0;
    for (int i = -half_[0]; i <= half_[0]; ++i)
      for (int j = -half_[1]; j <= half_[1]; ++j)
        for (int l = -half_[2]; l <= half_[2]; ++l) f(Offset{i, j, l}, coeffs_[k++]);
  }

  static Stencil combine(const Stencil& x, const Stencil& y, double sign) {
    if (x.dim_ != y.dim_) throw std::invalid_argument("Stencil: dimension mismatch");
    Offset h;
    for (int a = 0; a < 3; ++a) h[a] = std::max(x.half_[a], y.half_[a]);
    Stencil out(x.dim_, h);
    out.for_each_mut([&](const Offset& o, cplx& c) { c = x.get(o) + sign * y.get(o); });
    return out;
  }

  int dim_;
  Offset half_;
  std::vector<cplx> coeffs_;
};

/// Fourier symbol sum_o s[o] exp(i o.theta).
inline cplx symbol(const Stencil& s, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != s.dim())
    throw std::invalid_argument("symbol: theta length " + std::to_string(theta.size()) +
                                " does not match stencil dim " + std::to_string(s.dim()));
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (size_t a = 0; a < theta.size(); ++a) t[a] = theta[a];
  cplx acc{0.0};
  s.for_each([&](const Offset& o, cplx c) {
    if (c == cplx{0.0}) return;
    const double phase = o[0] * t[0] + o[1] * t[1] + o[2] * t[2];
    acc += c * cplx(std::cos(phase), std::sin(phase));
  });
  return acc;
}

inline cplx symbol(const Stencil& s, std::initializer_list<double> theta) {
  return symbol(s, std::span<const double>(theta.begin(), theta.size()));
}

/// Kronecker product of 1D factors; the result has dim = factors.size().
inline Stencil tensor_product(std::span<const Stencil> factors) {
  if (factors.empty() || factors.size() > 3)
    throw std::invalid_argument("tensor_product: need 1 to 3 factors");
  for (const auto& f : factors)
    if (f.dim() != 1) throw std::invalid_argument("tensor_product: factors must be 1D");
  const int d = static_cast<int>(factors.size());
  Offset h{0, 0, 0};
  for (int a = 0; a < d; ++a) h[a] = factors[static_cast<size_t>(a)].half(0);
  Stencil out(d, h);
  for (int i = -h[0]; i <= h[0]; ++i)
    for (int j = -h[1]; j <= h[1]; ++j)
      for (int l = -h[2]; l <= h[2]; ++l) {
        const Offset o{i, j, l};
        cplx v{1.0};
        for (int a = 0; a < d; ++a) v *= factors[static_cast<size_t>(a)].at({o[a], 0, 0});
        out.at(o) = v;
      }
  return out;
}

inline Stencil tensor_power(const Stencil& factor, int dim) {
  std::vector<Stencil> f(static_cast<size_t>(dim), factor);
  return tensor_product(f);
}

/// Prolongation stencil paired with a restriction stencil: the adjoint of
/// restriction scaled by 2^dim, written as interpolation weights from a coarse
/// point to the fine points around its fine-grid image. Restriction
/// (1/4)[1 2 1] gives linear interpolation [1/2 1 1/2].
inline Stencil transpose_scale(const Stencil& restriction, int dim) {
  if (restriction.dim() != dim) throw std::invalid_argument("transpose_scale: dimension mismatch");
  Stencil out(dim, restriction.half());
  const double scale = std::ldexp(1.0, dim);
  restriction.for_each([&](const Offset& o, cplx c) { out.at({-o[0], -o[1], -o[2]}) = scale * c; });
  return out;
}

/// Full discrete convolution (a*b)[o] = sum_p a[p] b[o-p].
inline Stencil convolve(const Stencil& a, const Stencil& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  Offset h;
  for (int ax = 0; ax < 3; ++ax) h[ax] = a.half(ax) + b.half(ax);
  Stencil out(a.dim(), h);
  a.for_each([&](const Offset& p, cplx ca) {
    if (ca == cplx{0.0}) return;
    b.for_each([&](const Offset& q, cplx cb) {
      if (cb == cplx{0.0}) return;
      out.at({p[0] + q[0], p[1] + q[1], p[2] + q[2]}) += ca * cb;
    });
  });
  return out;
}

/// Point reflection s[o] -> s[-o].
inline Stencil reflected(const Stencil& s) {
  Stencil out(s.dim(), s.half());
  s.for_each([&](const Offset& o, cplx c) { out.at({-o[0], -o[1], -o[2]}) = c; });
  return out;
}

/// Keep even offsets and halve them (vertex-centered coarsening: coarse
/// offset 0 coincides with fine offset 0).
inline Stencil downsample2(const Stencil& s) {
  Offset h;
  for (int a = 0; a < 3; ++a) h[a] = s.half(a) / 2;
  Stencil out(s.dim(), h);
  s.for_each([&](const Offset& o, cplx c) {
    if (o[0] % 2 == 0 && o[1] % 2 == 0 && o[2] % 2 == 0) out.at({o[0] / 2, o[1] / 2, o[2] / 2}) = c;
  });
  return out;
}

/// Effective coarse stencil of R*A*P for a constant-coefficient fine operator
/// and stride-2 coarsening.
///
/// With R_{J,i} = r[i-2J], A_{i,j} = a[j-i] and P_{j,K} = p[j-2K], the coarse
/// row stencil at offset m = K-J is sum_{s} (r*a)[s] p[s-2m], i.e. the even
/// entries of r*a*reflect(p).
inline Stencil galerkin_stencil(const Stencil& fine, const Stencil& restriction,
                                const Stencil& prolongation) {
  if (fine.dim() != restriction.dim() || fine.dim() != prolongation.dim())
    throw std::invalid_argument("galerkin_stencil: dimension mismatch");
  return downsample2(convolve(convolve(restriction, fine), reflected(prolongation)));
}

/// Standard 1D transfer stencils.
namespace transfer1d {
inline Stencil cubic_restriction() { return Stencil::from_1d({1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0}); }
inline Stencil linear_restriction() { return Stencil::from_1d({0.25, 0.5, 0.25}); }
}  // namespace transfer1d

}  // namespace hmg
