#include "magfio/symbols/conversions.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace magfio;

namespace {

MultiIndex mi(std::initializer_list<int> v) {
  MultiIndex m{};
  std::size_t i = 0;
  for (int x : v) m[i++] = x;
  return m;
}

}  // namespace

TEST(Symbol, RegistryBuildsEveryName) {
  for (const auto& name : symbol_names()) {
    for (int d : {1, 2}) {
      Symbol a = make_symbol(NamedSpec::parse(name), d);
      EXPECT_EQ(a.dim(), d) << name;
      Complex v = a(Vec::Constant(d, 0.3), Vec::Constant(d, 1.5));
      EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag())) << name;
    }
  }
  EXPECT_THROW(make_symbol(NamedSpec::parse("nonsense"), 1), ConfigError);
  EXPECT_THROW(make_symbol(NamedSpec::parse("aniso:q=1"), 1), ConfigError);
}

TEST(Symbol, RealSymbolsHaveZeroImaginaryPart) {
  auto samples = phase_samples(2, 64, 3.0, 50.0);
  for (const auto& name : symbol_names()) {
    Symbol a = make_symbol(NamedSpec::parse(name), 2);
    if (!a.is_real()) continue;
    for (const auto& p : samples) EXPECT_EQ(a(p.x, p.xi).imag(), 0.0) << name;
  }
}

TEST(Symbol, JetMatchesFiniteDifferences) {
  Symbol a = aniso(2, 0.3);
  Vec x = make_vec({0.4, -0.2}), xi = make_vec({1.5, 2.5});
  auto D = a.derivatives(x, xi);
  const double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    Vec e = Vec::Zero(2);
    e(k) = h;
    EXPECT_NEAR(D.dx(k).real(), ((a(x + e, xi) - a(x - e, xi)) / (2 * h)).real(), 1e-8);
    EXPECT_NEAR(D.dxi(k).real(), ((a(x, xi + e) - a(x, xi - e)) / (2 * h)).real(), 1e-8);
  }
}

TEST(Symbol, SeminormsAreFiniteOnTestBox) {
  auto samples = phase_samples(2, 200, 3.0, 200.0);
  Symbol a = aniso(2, 0.3);
  for (int ax = 0; ax <= 2; ++ax)
    for (int bx = 0; bx <= 2; ++bx) {
      double s = seminorm_estimate(a, 1.0, mi({bx, 0}), mi({ax, 0}), samples);
      EXPECT_TRUE(std::isfinite(s));
      EXPECT_LT(s, 10.0);
    }
}

TEST(Symbol, PrincipalPartIsHomogeneous) {
  for (const auto& name : {"relativistic", "aniso", "tilted", "homog_relativistic"}) {
    Symbol a = make_symbol(NamedSpec::parse(name), 2);
    ASSERT_TRUE(a.has_principal()) << name;
    const Symbol& p = a.principal();
    Vec x = make_vec({0.3, -0.8});
    Vec xi = make_vec({0.6, 0.8});
    for (double lam : {2.0, 4.0, 8.0}) {
      Complex lhs = p(x, lam * xi), rhs = std::pow(lam, a.order()) * p(x, xi);
      EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-10 * std::abs(rhs)) << name;
    }
  }
}

TEST(Seminorm, Examples) {
  auto samples = phase_samples(2, 200, 3.0, 100.0);
  EXPECT_DOUBLE_EQ(seminorm_estimate(one_symbol(2), 0.0, MultiIndex{}, MultiIndex{}, samples), 1.0);
  EXPECT_LE(seminorm_estimate(relativistic(2), 1.0, mi({1, 0}), MultiIndex{}, samples), 1.0 + 1e-15);
  // x.xi is unbounded in x: the estimate grows with the sampling box.
  auto small = phase_samples(2, 200, 1.0, 100.0), large = phase_samples(2, 200, 100.0, 100.0);
  double s1 = seminorm_estimate(x_dot_xi(2), 1.0, MultiIndex{}, MultiIndex{}, small);
  double s2 = seminorm_estimate(x_dot_xi(2), 1.0, MultiIndex{}, MultiIndex{}, large);
  EXPECT_GT(s2, 20.0 * s1);
}

TEST(Ellipticity, Examples) {
  auto samples = phase_samples(2, 400, 3.0, 100.0);
  auto r = is_elliptic_sample(relativistic(2), 1.0, 1.0, samples);
  EXPECT_TRUE(r.elliptic);
  EXPECT_NEAR(r.constant, 1.0, 1e-12);
  Symbol xi1 = symbol_from_function(2, 1.0, [](const Vec&, const Vec& xi) { return Complex(xi(0)); }, "xi1");
  std::vector<PhasePoint> axis = samples;
  axis.push_back({make_vec({0.0, 0.0}), make_vec({0.0, 10.0})});
  EXPECT_FALSE(is_elliptic_sample(xi1, 1.0, 1.0, axis).elliptic);
  EXPECT_FALSE(is_elliptic_sample(Complex(0.0) * one_symbol(2), 0.0, 1.0, samples).elliptic);
}

TEST(AsymptoticSum, Examples) {
  Vec x = make_vec({0.1});
  Symbol a0 = relativistic(1);
  Symbol single = asymptotic_sum({a0}, std::vector<double>{1.0});
  EXPECT_EQ(single(x, make_vec({2.5})), a0(x, make_vec({2.5})));
  EXPECT_EQ(single(x, make_vec({0.5})), Complex(0.0));
  Symbol a1 = modulated(1, 0.5, 0.0);
  Symbol two = asymptotic_sum({a0, a1}, std::vector<double>{1.0, 8.0});
  Vec xi = make_vec({32.0});
  EXPECT_NEAR(std::abs(two(x, xi) - a0(x, xi) - a1(x, xi)), 0.0, 1e-14);
  auto samples = phase_samples(1, 64, 3.0, 50.0);
  Symbol borel = asymptotic_sum({a0, a1}, samples);
  EXPECT_EQ(borel.order(), 1.0);
  EXPECT_THROW(asymptotic_sum({a0, a1}, std::vector<double>{1.0}), ConfigError);
}

TEST(QuantizationChange, XIndependentAndSingleTermAreIdentity) {
  Symbol a = relativistic(2);
  Vec x = make_vec({0.2, 0.3}), xi = make_vec({1.0, -2.0});
  EXPECT_EQ(weyl_to_left(a, 4)(x, xi), a(x, xi));
  EXPECT_EQ(left_to_weyl(a, 4)(x, xi), a(x, xi));
  Symbol b = aniso(2, 0.3);
  EXPECT_EQ(weyl_to_left(b, 1)(x, xi), b(x, xi));
}

TEST(QuantizationChange, XDotXiShiftsByHalfDimension) {
  for (int d : {1, 2}) {
    Symbol a = x_dot_xi(d);
    Vec x = Vec::Constant(d, 0.7), xi = Vec::Constant(d, -1.3);
    Complex base = a(x, xi);
    EXPECT_NEAR(std::abs(weyl_to_left(a, 2)(x, xi) - (base - kI * (d / 2.0))), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(left_to_weyl(a, 2)(x, xi) - (base + kI * (d / 2.0))), 0.0, 1e-13);
  }
}

TEST(PrincipalTruncation, CutoffRegions) {
  Symbol a0 = abs_xi(1);
  Symbol t = principal_truncation(a0, 1.0);
  Vec x = make_vec({0.0});
  EXPECT_EQ(t(x, make_vec({2.5})), Complex(2.5));
  EXPECT_EQ(t(x, make_vec({0.5})), Complex(0.0));
  EXPECT_EQ(t(x, make_vec({0.0})), Complex(0.0));
  double v1 = t.principal()(x, make_vec({1.0})).real(), v4 = t.principal()(x, make_vec({4.0})).real();
  EXPECT_NEAR(v4, 4.0 * v1, 1e-10);
}
