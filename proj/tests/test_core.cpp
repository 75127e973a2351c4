#include "magfio/core/quadrature.hpp"
#include "magfio/core/spec.hpp"
#include "magfio/core/taylor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace magfio;

TEST(Taylor, ProductRuleAndPartials) {
  const auto& tab = MonomialTable::get(2, 3);
  auto x = RealJet::variable(tab, 0, 0.7);
  auto y = RealJet::variable(tab, 1, -0.4);
  auto f = x * x * y + sin(x * y);
  const double xv = 0.7, yv = -0.4;
  EXPECT_NEAR(f.value(), xv * xv * yv + std::sin(xv * yv), 1e-15);
  EXPECT_NEAR(f.partial(0), 2 * xv * yv + yv * std::cos(xv * yv), 1e-14);
  EXPECT_NEAR(f.partial(1), xv * xv + xv * std::cos(xv * yv), 1e-14);
  EXPECT_NEAR(f.partial(0, 1), 2 * xv + std::cos(xv * yv) - xv * yv * std::sin(xv * yv), 1e-14);
  EXPECT_NEAR(f.partial(1, 1), -xv * xv * std::sin(xv * yv), 1e-14);
}

TEST(Taylor, ElementaryFunctionsMatchFiniteDifferences) {
  const auto& tab = MonomialTable::get(1, 2);
  auto g = [](double v) { return std::exp(std::sqrt(1.0 + v * v)) / std::log(2.0 + v); };
  auto x = RealJet::variable(tab, 0, 0.3);
  auto f = exp(sqrt(x * x + 1.0)) / log(x + 2.0);
  const double h = 1e-4;
  EXPECT_NEAR(f.value(), g(0.3), 1e-14);
  EXPECT_NEAR(f.partial(0), (g(0.3 + h) - g(0.3 - h)) / (2 * h), 1e-7);
  EXPECT_NEAR(f.partial(0, 0), (g(0.3 + h) - 2 * g(0.3) + g(0.3 - h)) / (h * h), 1e-5);
}

TEST(Taylor, PowMatchesRepeatedProduct) {
  const auto& tab = MonomialTable::get(2, 4);
  auto x = RealJet::variable(tab, 0, 1.3) + RealJet::variable(tab, 1, 0.2);
  auto a = pow(x, 3.0);
  auto b = x * x * x;
  for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  for (int n : {4, 8, 16}) {
    const auto& r = gauss_legendre(n);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 2 * n - 1);
    EXPECT_NEAR(s, 1.0 / (2 * n), 1e-14) << n;
  }
  EXPECT_THROW(gauss_legendre(5), ConfigError);
}

TEST(Quadrature, SimpsonAndCumulative) {
  std::vector<double> f(101);
  const double h = 1.0 / 100;
  for (int i = 0; i <= 100; ++i) f[static_cast<std::size_t>(i)] = std::exp(i * h);
  EXPECT_NEAR(simpson<double>(f, h), std::exp(1.0) - 1.0, 1e-9);
  auto c = cumulative_integral<double>(f, h);
  for (int i = 0; i <= 100; i += 10) EXPECT_NEAR(c[static_cast<std::size_t>(i)], std::exp(i * h) - 1.0, 1e-9);
  std::vector<double> even(4, 1.0);
  EXPECT_THROW(simpson<double>(even, h), ConfigError);
}

TEST(NamedSpec, ParseAndRoundTrip) {
  auto s = NamedSpec::parse("bump:b0=0.5,width=2");
  EXPECT_EQ(s.name, "bump");
  EXPECT_DOUBLE_EQ(s.get("b0", 0.0), 0.5);
  EXPECT_DOUBLE_EQ(s.get("width", 0.0), 2.0);
  EXPECT_DOUBLE_EQ(s.get("missing", 7.0), 7.0);
  EXPECT_EQ(NamedSpec::parse(s.to_string()).params, s.params);
  EXPECT_THROW(NamedSpec::parse("bump:b0"), ConfigError);
  EXPECT_THROW(NamedSpec::parse("bump:b0=abc"), ConfigError);
  EXPECT_THROW(NamedSpec::parse(":x=1"), ConfigError);
  EXPECT_THROW(s.check_keys({"b0"}), ConfigError);
}
