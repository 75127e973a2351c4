#include "magfio/calculus/calculus.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace magfio;

namespace {

const Vec kX = make_vec({0.4, -0.7});
const Vec kXi = make_vec({3.0, 1.5});

PhaseFunction eikonal_phase_fn(double t) { return PhaseFunction::from_eikonal(Eikonal(aniso(2, 0.3)), t); }

}  // namespace

TEST(PhaseFunction, StandardPhase) {
  auto U = PhaseFunction::standard(2);
  EikonalPoint p = U(kX, kXi);
  EXPECT_EQ(p.U, kX.dot(kXi));
  EXPECT_EQ(p.grad_x, kXi);
  EXPECT_EQ(p.grad_eta, kX);
  EXPECT_TRUE(U.is_standard());
}

TEST(PsidoFio, IdentityLeftFactor) {
  auto U = eikonal_phase_fn(0.2);
  Symbol b = twisted(2, 0.3, 0.4);
  Symbol c = compose_psido_fio_principal(one_symbol(2), b, U, bump_field(0.5, 2.0));
  EXPECT_EQ(c(kX, kXi), b(kX, kXi));
}

TEST(PsidoFio, StandardPhaseReducesToPsidoComposition) {
  Symbol a = aniso(2, 0.3), b = twisted(2, 0.3, 0.4);
  Symbol c = compose_psido_fio_principal(a, b, PhaseFunction::standard(2), zero_field(2));
  auto da = a.derivatives(kX, kXi, 1);
  auto db = b.derivatives(kX, kXi, 1);
  Complex expected = da.value * db.value - kI * da.dxi.cwiseProduct(db.dx).sum();
  EXPECT_NEAR(std::abs(c(kX, kXi) - expected), 0.0, 1e-14);
}

TEST(PsidoFio, MagneticCorrectionForConstantField) {
  // For constant B, M = B / 2 and e_B = <B grad_zeta a, grad_xi d> b / 2.
  const double bval = 0.8;
  auto B = constant_field(2, bval);
  Vec v = make_vec({0.3, -0.2});
  Mat M = magnetic_moment(B, kX, v);
  EXPECT_LT((M - 0.5 * B.matrix(kX)).norm(), 1e-15);
  CVec g(2);
  g << Complex(1.0, 0.5), Complex(-0.3, 0.0);
  Complex e = magnetic_correction(B, g, kX, v, 2.0);
  Complex expected = 0.5 * bval * (g(1) * v(0) - g(0) * v(1)) * 2.0;
  EXPECT_NEAR(std::abs(e - expected), 0.0, 1e-15);
  EXPECT_EQ(magnetic_correction(zero_field(2), g, kX, v, 2.0), Complex(0.0));
}

TEST(FioPsido, Examples) {
  auto U = eikonal_phase_fn(0.2);
  Symbol a = twisted(2, 0.3, 0.4), b = aniso(2, 0.3);
  EXPECT_EQ(compose_fio_psido_principal(a, one_symbol(2), U)(kX, kXi), a(kX, kXi));
  Complex prod = compose_fio_psido_principal(a, b, PhaseFunction::standard(2))(kX, kXi);
  EXPECT_NEAR(std::abs(prod - a(kX, kXi) * b(kX, kXi)), 0.0, 1e-14);
}

TEST(LambdaInverse, Examples) {
  EXPECT_EQ(lambda_inverse(PhaseFunction::standard(2), kX, kXi), kXi);
  auto Ufree = PhaseFunction::from_eikonal(Eikonal(relativistic(2)), 0.5);
  EXPECT_LT((lambda_inverse(Ufree, kX, kXi) - kXi).norm(), 1e-14);
  auto U = eikonal_phase_fn(0.2);
  Vec lam = lambda_inverse(U, kX, kXi);
  EXPECT_LT((U(kX, lam).grad_x - kXi).norm(), 1e-10);
}

TEST(VInverse, Examples) {
  EXPECT_EQ(V_inverse(PhaseFunction::standard(2), kX, kXi), kX);
  Symbol a = relativistic(2);
  auto Ufree = PhaseFunction::from_eikonal(Eikonal(a), 0.5);
  Vec expected = kX + 0.5 * a.derivatives(kX, kXi, 1).dxi.real();
  // grad_eta U(y, xi) = y - t grad a(xi) = x.
  EXPECT_LT((V_inverse(Ufree, kX, kXi) - expected).norm(), 1e-12);
  auto U = eikonal_phase_fn(0.2);
  Vec y = V_inverse(U, kX, kXi);
  EXPECT_LT((U(y, kXi).grad_eta - kX).norm(), 1e-10);
}

TEST(FioFiostar, Examples) {
  Symbol a = twisted(2, 0.3, 0.4);
  auto U0 = PhaseFunction::standard(2);
  EXPECT_NEAR(std::abs(fio_fiostar_principal(a, a, U0)(kX, kXi) - std::norm(a(kX, kXi))), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(fio_fiostar_principal(a, one_symbol(2), U0)(kX, kXi) - a(kX, kXi)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(fiostar_fio_principal(a, a, U0)(kX, kXi) - std::norm(a(kX, kXi))), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(fiostar_fio_principal(one_symbol(2), a, U0)(kX, kXi) - a(kX, kXi)), 0.0, 1e-14);
  // With an x-independent Hamiltonian the mixed Hessian is the identity.
  auto Ufree = PhaseFunction::from_eikonal(Eikonal(relativistic(2)), 0.5);
  EXPECT_NEAR(std::abs(fio_fiostar_principal(a, a, Ufree)(kX, kXi) - std::norm(a(kX, kXi))), 0.0, 1e-12);
}

TEST(Egorov, Examples) {
  Symbol h = relativistic(2);
  Symbol a = twisted(2, 0.3, 0.4);
  EXPECT_EQ(egorov_symbol(one_symbol(2), h, 0.5)(kX, kXi), Complex(1.0));
  EXPECT_EQ(egorov_symbol(a, h, 0.0)(kX, kXi), a(kX, kXi));
  Vec back = kX - 0.5 * h.derivatives(kX, kXi, 1).dxi.real();
  EXPECT_NEAR(std::abs(egorov_symbol(a, h, 0.5)(kX, kXi) - a(back, kXi)), 0.0, 1e-12);
}

TEST(OrderScaling, SyntheticResiduals) {
  std::vector<double> lams{4, 8, 16, 32};
  std::vector<Vec> xs{make_vec({0.0}), make_vec({1.0})};
  Vec xi0 = make_vec({1.0});
  auto inv = [](const Vec&, const Vec& xi) { return Complex(1.0 / std::sqrt(1.0 + xi.squaredNorm())); };
  EXPECT_NEAR(order_scaling_exponent(inv, xs, xi0, lams), -1.0, 0.05);
  auto zero = [](const Vec&, const Vec&) { return Complex(0.0); };
  EXPECT_EQ(order_scaling_exponent(zero, xs, xi0, lams), -std::numeric_limits<double>::infinity());
  auto one = [](const Vec&, const Vec&) { return Complex(3.0); };
  EXPECT_NEAR(order_scaling_exponent(one, xs, xi0, lams), 0.0, 0.05);
  EXPECT_THROW(order_scaling_exponent(std::vector<double>{4, 8, 16}, {1, 1, 1}), ConfigError);
  EXPECT_THROW(order_scaling_exponent(std::vector<double>{4, 8, 16, 30}, {1, 1, 1, 1}), ConfigError);
}

TEST(Composition, TheoremNames) {
  EXPECT_EQ(theorem_from_string("psido-fio"), Theorem::PsidoFio);
  EXPECT_EQ(theorem_from_string("fiostar-fio"), Theorem::FiostarFio);
  EXPECT_EQ(to_string(theorem_from_string("fio-fiostar")), "fio-fiostar");
  EXPECT_THROW(theorem_from_string("bogus"), ConfigError);
  EXPECT_EQ(claimed_residual_order(Theorem::PsidoFio, 1, 0), -1.0);
  EXPECT_EQ(claimed_residual_order(Theorem::FioPsido, 1, 0), 0.0);
}

TEST(Composition, FrequencyIndex) {
  Grid g(1, 16, kPi);
  EXPECT_EQ(frequency_index(g, make_vec({0.0})), 8);
  EXPECT_EQ(frequency_index(g, make_vec({-8.0})), 0);
  EXPECT_THROW(frequency_index(g, make_vec({0.5})), ConfigError);
  EXPECT_THROW(frequency_index(g, make_vec({8.0})), ConfigError);
}

TEST(Composition, PsidoPsidoOnGridHasTwoOrderGain) {
  // Standard phase: the grid product of left quantizations against the
  // two-term composition formula.
  Grid g(1, 256, 2.0 * kPi);
  Quantizer q(g, zero_potential(1));
  Symbol a = aniso(1, 0.3), b = modulated(1, 0.4, 0.0);
  auto U = PhaseFunction::standard(1);
  PhaseSamples Us = U.sample(g);
  auto r = composition_check(Theorem::PsidoFio, q, a, b, U, Us, zero_field(1), make_vec({1.0}), {4, 8, 16, 32});
  EXPECT_TRUE(r.pass) << "slope " << r.slope << " bound " << r.bound;
  EXPECT_LE(r.slope, claimed_residual_order(Theorem::PsidoFio, 1.0, 0.0) + 0.7);
}
