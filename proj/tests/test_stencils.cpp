#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "hmg/discretization.hpp"
#include "hmg/multigrid.hpp"
#include "hmg/stencil.hpp"
#include "support/periodic_oracle.hpp"

using namespace hmg;

namespace {

double max_diff(const Stencil& a, const Stencil& b) {
  Offset h;
  for (int i = 0; i < 3; ++i) h[i] = std::max(a.half(i), b.half(i));
  double m = 0.0;
  Stencil(a.dim(), h).for_each([&](const Offset& o, cplx) { m = std::max(m, std::abs(a.get(o) - b.get(o))); });
  return m;
}

Stencil random_stencil(int dim, int half, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Offset h{0, 0, 0};
  for (int a = 0; a < dim; ++a) h[a] = half;
  Stencil s(dim, h);
  s.fill([&](const Offset&) { return cplx(u(rng), u(rng)); });
  return s;
}

}  // namespace

TEST(Symbol, FourthOrder2DConstantModeIsMinusK2) {
  for (double kh : {0.1, 0.5, 2 * std::numbers::pi / 12}) {
    const cplx v = symbol(helmholtz_stencil(2, Scheme::fourth_order(), kh), {0.0, 0.0});
    EXPECT_NEAR(v.real(), -kh * kh, 1e-15);
    EXPECT_NEAR(v.imag(), 0.0, 1e-15);
  }
}

TEST(Symbol, FourthOrder2DCheckerboardWithoutWavenumber) {
  const cplx v = symbol(helmholtz_stencil(2, Scheme::fourth_order(), 0.0), {std::numbers::pi, std::numbers::pi});
  EXPECT_NEAR(v.real(), 16.0 / 3.0, 1e-14);
}

TEST(Symbol, FourthOrder3DConstantModeIsMinusK2) {
  const double kh = 0.4;
  const cplx v = symbol(helmholtz_stencil(3, Scheme::fourth_order(), kh), {0.0, 0.0, 0.0});
  EXPECT_NEAR(v.real(), -kh * kh, 1e-15);
}

TEST(Symbol, DimensionMismatchThrows) {
  EXPECT_THROW(symbol(Stencil::identity(2), {0.0}), std::invalid_argument);
  EXPECT_THROW(symbol(Stencil::identity(1), {0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(Symbol, LinearInTheStencil) {
  std::mt19937 rng(7);
  for (int dim = 1; dim <= 3; ++dim) {
    const Stencil s1 = random_stencil(dim, 2, rng), s2 = random_stencil(dim, 1, rng);
    const cplx a(0.3, -1.2), b(2.0, 0.5);
    std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> theta(static_cast<size_t>(dim));
      for (auto& x : theta) x = th(rng);
      const cplx lhs = symbol(a * s1 + b * s2, theta);
      const cplx rhs = a * symbol(s1, theta) + b * symbol(s2, theta);
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Symbol, RealForSymmetricRealStencils) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
  for (int dim = 2; dim <= 3; ++dim) {
    const Stencil s = helmholtz_stencil(dim, Scheme::fourth_order(), 0.7);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> theta(static_cast<size_t>(dim));
      for (auto& x : theta) x = th(rng);
      const cplx v = symbol(s, theta);
      EXPECT_LE(std::abs(v.imag()), 1e-12 * std::max(1.0, std::abs(v.real())));
    }
  }
}

TEST(TensorProduct, CubicRestriction2D) {
  const Stencil r = tensor_power(transfer1d::cubic_restriction(), 2);
  EXPECT_EQ(r.extent(0), 5);
  EXPECT_EQ(r.extent(1), 5);
  EXPECT_NEAR(r.sum().real(), 1.0, 1e-15);
  EXPECT_NEAR(r.at({0, 0, 0}).real(), 36.0 / 256.0, 1e-15);
  EXPECT_NEAR(r.at({-2, 1, 0}).real(), 4.0 / 256.0, 1e-15);
}

TEST(TensorProduct, IdentityFactors) {
  const Stencil one = Stencil::from_1d({1.0});
  const std::vector<Stencil> f{one, one};
  const Stencil s = tensor_product(f);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.at({0, 0, 0}), cplx(1.0));
}

TEST(TensorProduct, FullWeighting) {
  const Stencil s = tensor_power(transfer1d::linear_restriction(), 2);
  EXPECT_DOUBLE_EQ(s.at({0, 0, 0}).real(), 0.25);
  EXPECT_DOUBLE_EQ(s.at({1, 0, 0}).real(), 0.125);
  EXPECT_DOUBLE_EQ(s.at({0, -1, 0}).real(), 0.125);
  EXPECT_DOUBLE_EQ(s.at({1, 1, 0}).real(), 0.0625);
  EXPECT_DOUBLE_EQ(s.at({-1, 1, 0}).real(), 0.0625);
}

TEST(TensorProduct, RejectsNon1DFactors) {
  const std::vector<Stencil> f{Stencil::identity(2)};
  EXPECT_THROW(tensor_product(f), std::invalid_argument);
}

TEST(TransposeScale, LinearInterpolation) {
  const Stencil p = transpose_scale(transfer1d::linear_restriction(), 1);
  EXPECT_DOUBLE_EQ(p.at({-1, 0, 0}).real(), 0.5);
  EXPECT_DOUBLE_EQ(p.at({0, 0, 0}).real(), 1.0);
  EXPECT_DOUBLE_EQ(p.at({1, 0, 0}).real(), 0.5);
}

TEST(TransposeScale, CubicMatchesAssembledTranspose) {
  // 2 R^T of the periodic 16-point restriction, read as the weights a coarse
  // point spreads to the fine points around its image.
  const oracle::PeriodicGrid fine{1, 16};
  const auto R = oracle::restriction_matrix(fine, transfer1d::cubic_restriction());
  const oracle::Mat PT = 2.0 * R;  // row K of 2R is column K of 2R^T
  const int K = 4;
  const Stencil p = transpose_scale(transfer1d::cubic_restriction(), 1);
  for (oracle::Mat::InnerIterator it(PT, K); it; ++it) {
    const int o = static_cast<int>(it.col()) - 2 * K;
    EXPECT_NEAR(std::abs(p.at({o, 0, 0}) - it.value()), 0.0, 1e-15);
  }
  // Frozen values: (1/8)[1 4 6 4 1].
  const double expect[] = {0.125, 0.5, 0.75, 0.5, 0.125};
  for (int o = -2; o <= 2; ++o) EXPECT_DOUBLE_EQ(p.at({o, 0, 0}).real(), expect[o + 2]);
  // Every fine point receives total weight 1: even points 3/4 + 2/8,
  // odd points 1/2 + 1/2.
  EXPECT_DOUBLE_EQ(expect[2] + expect[0] + expect[4], 1.0);
  EXPECT_DOUBLE_EQ(expect[1] + expect[3], 1.0);
}

TEST(TransposeScale, BicubicReproducesConstants) {
  const Stencil p = transpose_scale(tensor_power(transfer1d::cubic_restriction(), 2), 2);
  // Interpolate a constant coarse field: each fine point sums weights of the
  // coarse points mapping onto it.
  for (int fi = 0; fi < 2; ++fi)
    for (int fj = 0; fj < 2; ++fj) {
      double total = 0.0;
      p.for_each([&](const Offset& o, cplx c) {
        if (((o[0] - fi) % 2 == 0) && ((o[1] - fj) % 2 == 0)) total += c.real();
      });
      EXPECT_NEAR(total, 1.0, 1e-15);
    }
}

TEST(GalerkinStencil, OneDimensionalLaplacian) {
  const Stencil a = Stencil::from_1d({-1.0, 2.0, -1.0});
  const Stencil r = transfer1d::linear_restriction();
  const Stencil p = transpose_scale(r, 1);
  const Stencil c = galerkin_stencil(a, r, p).trimmed(1e-15);
  const Stencil ref = oracle::triple_product_stencil(a, r, p, 32).trimmed(1e-15);
  EXPECT_LE(max_diff(c, ref), 1e-15);
  // Frozen from the oracle: (1/4)[-1 2 -1].
  ASSERT_EQ(c.extent(0), 3);
  EXPECT_NEAR(c.at({-1, 0, 0}).real(), -0.25, 1e-15);
  EXPECT_NEAR(c.at({0, 0, 0}).real(), 0.5, 1e-15);
  EXPECT_NEAR(c.at({1, 0, 0}).real(), -0.25, 1e-15);
}

TEST(GalerkinStencil, ZeroStencil) {
  const Stencil r = tensor_power(transfer1d::cubic_restriction(), 2);
  const Stencil c = galerkin_stencil(Stencil(2, {1, 1, 0}), r, transpose_scale(r, 2));
  EXPECT_EQ(c.max_abs(), 0.0);
}

TEST(GalerkinStencil, MatchesTripleProductOracle) {
  const double kh = 2 * std::numbers::pi / 12;
  for (int dim = 1; dim <= 3; ++dim) {
    const int n = dim == 3 ? 16 : 32;
    for (Intergrid g : {Intergrid::Cubic, Intergrid::LevelDependent}) {
      const auto r = restriction_stencils(g, dim);
      const auto p = prolongation_stencils(g, dim);
      const Stencil fine = helmholtz_stencil(dim, Scheme::fourth_order(), kh, 1.0045);
      const Stencil s2 = galerkin_stencil(fine, r[0], p[0]);
      const Stencil o2 = oracle::triple_product_stencil(fine, r[0], p[0], n);
      EXPECT_LE(max_diff(s2, o2), 1e-12 * s2.max_abs()) << "dim " << dim;
      const Stencil s3 = galerkin_stencil(s2, r[1], p[1]);
      const Stencil o3 = oracle::triple_product_stencil(s2, r[1], p[1], n);
      EXPECT_LE(max_diff(s3, o3), 1e-12 * s3.max_abs()) << "dim " << dim;
    }
  }
}

TEST(GalerkinStencil, OracleRejectsSmallGrids) {
  const Stencil r = transfer1d::cubic_restriction();
  EXPECT_THROW(oracle::triple_product_stencil(Stencil::from_1d({-1.0, 2.0, -1.0}), r, transpose_scale(r, 1), 8),
               oracle::WraparoundError);
}

TEST(GalerkinStencil, CoarsestSupportSizes) {
  const Stencil fine = helmholtz_stencil(2, Scheme::fourth_order(), 0.5);
  for (auto [g, half] : {std::pair{Intergrid::Cubic, 3}, std::pair{Intergrid::LevelDependent, 2}}) {
    const auto r = restriction_stencils(g, 2);
    const auto p = prolongation_stencils(g, 2);
    const Stencil c = galerkin_stencil(galerkin_stencil(fine, r[0], p[0]), r[1], p[1]);
    const Offset h = c.support_half(1e-14 * c.max_abs());
    EXPECT_EQ(h[0], half);
    EXPECT_EQ(h[1], half);
  }
}

TEST(GalerkinStencil, BilinearInFine) {
  std::mt19937 rng(11);
  const auto r = restriction_stencils(Intergrid::Cubic, 2);
  const auto p = prolongation_stencils(Intergrid::Cubic, 2);
  const Stencil a = random_stencil(2, 1, rng), b = random_stencil(2, 1, rng);
  const cplx x(1.5, -0.5), y(-0.25, 2.0);
  const Stencil lhs = galerkin_stencil(x * a + y * b, r[0], p[0]);
  const Stencil rhs = x * galerkin_stencil(a, r[0], p[0]) + y * galerkin_stencil(b, r[0], p[0]);
  EXPECT_LE(max_diff(lhs, rhs), 1e-14);
}

TEST(Restriction, EntriesSumToOne) {
  for (int dim = 1; dim <= 3; ++dim)
    for (Intergrid g : {Intergrid::Cubic, Intergrid::LevelDependent, Intergrid::Linear})
      for (const Stencil& r : restriction_stencils(g, dim)) EXPECT_NEAR(r.sum().real(), 1.0, 1e-15);
}

TEST(StencilStorage, RejectsEvenExtentAndBadAxes) {
  EXPECT_THROW(Stencil::from_1d({1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(Stencil(2, {1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(Stencil(4, {0, 0, 0}), std::invalid_argument);
  EXPECT_TRUE(Stencil::identity(3).is_finite());
}
