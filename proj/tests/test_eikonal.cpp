#include "magfio/eikonal/eikonal.hpp"

#include <gtest/gtest.h>

using namespace magfio;

namespace {

// Frozen from tests/oracles/generate.py (DOP853 flow + brentq inversion).
constexpr double kU = 0.22398180514312116;
constexpr double kXi = 1.4528329751321374;
constexpr double kY = 0.23113079432851363;

}  // namespace

TEST(Action, FreeSymbolClosedForm) {
  Symbol a = relativistic(2);
  Eikonal eik(a);
  Vec y = make_vec({0.4, -0.3}), eta = make_vec({2.0, 1.0});
  auto D = a.derivatives(y, eta);
  double expected = y.dot(eta) + 0.6 * (eta.dot(D.dxi.real()) - D.value.real());
  EXPECT_NEAR(eik.action(0.6, y, eta), expected, 1e-12);
  EXPECT_EQ(eik.action(0.0, y, eta), y.dot(eta));
  // Degree-1 homogeneity: the action integrand vanishes.
  Eikonal hom(principal_truncation(abs_xi(2), 1.0));
  EXPECT_NEAR(hom.action(0.9, y, make_vec({3.0, 4.0})), y.dot(make_vec({3.0, 4.0})), 1e-12);
}

TEST(InvertFlow, Examples) {
  Vec x = make_vec({0.4, -0.3}), eta = make_vec({2.0, 1.0});
  Eikonal free(relativistic(2));
  Vec y = invert_flow_x(free, 0.5, x, eta);
  EXPECT_LT((y - (x - 0.5 * eta / std::sqrt(6.0))).norm(), 1e-14);
  Eikonal eik(aniso(2, 0.3));
  EXPECT_LT((invert_flow_x(eik, 0.0, x, eta) - x).norm(), 1e-15);
  Vec y3 = invert_flow_x(eik, 0.3, x, eta);
  EXPECT_LT((eik.trajectory(0.3, y3, eta, false).x() - x).norm(), 1e-10);
}

TEST(GeneratingFunction, MatchesIndependentOracle) {
  Eikonal eik(aniso(1, 0.3));
  EikonalPoint p = eik.evaluate(0.2, make_vec({0.4}), make_vec({1.5}));
  EXPECT_NEAR(p.U, kU, 1e-10);
  EXPECT_NEAR(p.grad_x(0), kXi, 1e-10);
  EXPECT_NEAR(p.y(0), kY, 1e-10);
}

TEST(GeneratingFunction, FreeCaseAndInitialValue) {
  Symbol a = relativistic(2);
  Eikonal free(a);
  Vec x = make_vec({0.4, -0.3}), eta = make_vec({2.0, 1.0});
  EXPECT_NEAR(generating_function(free, 0.7, x, eta), x.dot(eta) - 0.7 * a(x, eta).real(), 1e-14);
  Eikonal eik(aniso(2, 0.3));
  EXPECT_EQ(generating_function(eik, 0.0, x, eta), x.dot(eta));
}

TEST(GeneratingFunction, HamiltonJacobiResidualAndIdentities) {
  Eikonal eik(aniso(2, 0.3));
  for (double x1 : {-2.0, 0.0, 1.5})
    for (double e1 : {-4.0, 1.0, 6.0}) {
      Vec x = make_vec({x1, 0.5}), eta = make_vec({e1, -2.0});
      EXPECT_LT(std::abs(eik.hj_residual(0.2, x, eta)), 1e-5);
      EXPECT_LT(identity_defect(eik, 0.2, x, eta).worst(), 1e-8);
    }
}

TEST(GeneratingFunction, HessiansMatchFiniteDifferences) {
  Eikonal eik(aniso(2, 0.3));
  Vec x = make_vec({0.7, -0.4}), eta = make_vec({2.0, 3.0});
  EikonalPoint p = eik.evaluate(0.3, x, eta);
  const double h = 1e-4;
  for (int k = 0; k < 2; ++k) {
    Vec e = Vec::Zero(2);
    e(k) = h;
    Vec gx = (eik.evaluate(0.3, x + e, eta).grad_x - eik.evaluate(0.3, x - e, eta).grad_x) / (2 * h);
    Vec ge = (eik.evaluate(0.3, x, eta + e).grad_eta - eik.evaluate(0.3, x, eta - e).grad_eta) / (2 * h);
    Vec gxe = (eik.evaluate(0.3, x, eta + e).grad_x - eik.evaluate(0.3, x, eta - e).grad_x) / (2 * h);
    EXPECT_LT((gx - p.hess_xx.col(k)).norm(), 1e-6);
    EXPECT_LT((ge - p.hess_etaeta.col(k)).norm(), 1e-6);
    EXPECT_LT((gxe - p.hess_xeta.col(k)).norm(), 1e-6);
  }
}

TEST(GeneratingFunction, WindowIsEnforced) {
  Eikonal eik(aniso(1, 0.3), {}, 0.5);
  EXPECT_THROW(eik.evaluate(0.6, make_vec({0.0}), make_vec({1.0})), ConfigError);
  EXPECT_THROW(Eikonal(twisted(1, 0.3, 0.3)), ConfigError);
}

TEST(DPart, Examples) {
  Symbol a = relativistic(1);
  Eikonal free(a);
  Vec x = make_vec({0.4}), eta = make_vec({2.0});
  EXPECT_NEAR(free.d_part(0.7, x, eta).value, -0.7 * a(x, eta).real(), 1e-14);
  Eikonal eik(aniso(1, 0.3));
  const double t = 1e-4;
  EXPECT_NEAR(eik.d_part(t, x, eta).value / t, -aniso(1, 0.3)(x, eta).real(), 1e-3);
  for (double e : {-8.0, -1.0, 0.5, 4.0, 16.0}) EXPECT_LT(eik.d_part(0.2, x, make_vec({e})).mixed_norm, 1.0);
}

TEST(MatchRadius, Examples) {
  auto samples = phase_samples(2, 16, 3.0, 10.0);
  auto r = match_radius(abs_xi(2), 1.0, samples, 1.0);
  EXPECT_DOUBLE_EQ(r.R, 2.0);
  EXPECT_TRUE(r.verified);
  auto r2 = match_radius(aniso(2, 0.3).principal(), 1.5, samples, 0.5);
  EXPECT_TRUE(r2.verified);
  EXPECT_LT(r2.max_flow_mismatch, 1e-9);
  auto r3 = match_radius(tilted(2, 0.3).principal(), 1.0, samples, 0.5);
  EXPECT_GE(r3.R, 2.0);
  EXPECT_TRUE(r3.verified);
}
