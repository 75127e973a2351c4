#include "magfio/evolution/evolution.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace magfio;
using magfio::testing::rel_diff;

namespace {

// x-independent Hamiltonian equal to its own truncated principal part.
TransportSetup exact_setup(int d) {
  return make_transport_setup(homog_relativistic(d, 1.0), zero_field(d), zero_potential(d));
}

TransportSetup relativistic_setup(int d) {
  return make_transport_setup(relativistic(d), zero_field(d), zero_potential(d));
}

// Truncated homogeneous part plus an x-dependent order-zero perturbation.
Symbol perturbed(int d) {
  return with_principal(homog_relativistic(d, 1.0) + gaussian_bump(d, 1.0), abs_xi(d));
}

double identity_error(const GridOperator& K) {
  return (K.matrix - DenseMatrix::Identity(K.matrix.rows(), K.matrix.cols())).norm();
}

}  // namespace

TEST(TransportCoefficient, VanishesInExactCase) {
  auto s = exact_setup(2);
  for (double t : {0.0, 0.3, 1.0})
    EXPECT_NEAR(std::abs(transport_coefficient(s, t, make_vec({0.2, -0.4}), make_vec({3.0, 1.0}))), 0.0, 1e-14);
}

TEST(TransportCoefficient, FreeFlowSubstitution) {
  auto s = make_transport_setup(perturbed(1), zero_field(1), zero_potential(1));
  ASSERT_TRUE(s.free_flow());
  const Vec y = make_vec({-0.3});
  const Vec xi = make_vec({2.5});
  const double t = 0.7;
  // grad abar0 = sign(xi) in the homogeneous region.
  Complex expected = kI * s.b0(y + t * make_vec({1.0}), xi);
  EXPECT_NEAR(std::abs(transport_coefficient(s, t, y, xi) - expected), 0.0, 1e-12);
}

TEST(TransportCoefficient, InitialTime) {
  auto s = make_transport_setup(aniso(2, 0.3), bump_field(0.5, 2.0), transverse_gauge(bump_field(0.5, 2.0)));
  const Vec y = make_vec({0.5, 0.1});
  const Vec xi = make_vec({2.0, -3.0});
  EXPECT_EQ(transport_coefficient(s, 0.0, y, xi), kI * s.b0(y, xi));
}

TEST(TransportCoefficient, RejectsTimesOutsideWindow) {
  SetupOptions opt;
  opt.T = 0.5;
  auto s = make_transport_setup(aniso(1, 0.3), zero_field(1), zero_potential(1), opt);
  EXPECT_THROW(transport_coefficient(s, 0.6, make_vec({0.0}), make_vec({2.0})), ConfigError);
}

TEST(TransportSetup, RejectsMismatchedPrincipalPart) {
  Symbol wrong = with_principal(relativistic(1), cutoff(x_dot_xi(1)));
  EXPECT_THROW(make_transport_setup(wrong, zero_field(1), zero_potential(1)), ConfigError);
}

TEST(TransportSolve, ScalarOdeOracles) {
  const Vec y = make_vec({0.1});
  const Vec xi = make_vec({2.0});
  const double t = 0.8;
  auto exact = exact_setup(1);
  EXPECT_NEAR(std::abs(transport_solve(exact, t, y, xi, nullptr, 1.0) - 1.0), 0.0, 1e-14);

  auto rel = relativistic_setup(1);
  const Complex kappa = kI * rel.b0(y, xi);
  EXPECT_NEAR(std::abs(transport_solve(rel, t, y, xi, nullptr, 1.0) - std::exp(-kappa * t)), 0.0, 1e-12);

  const Complex gamma(0.7, -0.2);
  TransportSource src{[gamma](double, const Vec&, const Vec&) { return gamma; }, 4};
  EXPECT_NEAR(std::abs(transport_solve(exact, t, y, xi, &src, 0.0) - (-kI * gamma * t)), 0.0, 1e-13);
}

TEST(TransportSolve, SourceWithDecay) {
  // K = kappa constant, g = 1: z = -i (1 - e^{-kappa t}) / kappa.
  auto rel = relativistic_setup(1);
  const Vec y = make_vec({0.0});
  const Vec xi = make_vec({1.5});
  const double t = 0.6;
  const Complex kappa = kI * rel.b0(y, xi);
  TransportSource src{[](double, const Vec&, const Vec&) { return Complex(1.0); }, 0};
  Complex expected = -kI * (1.0 - std::exp(-kappa * t)) / kappa;
  EXPECT_NEAR(std::abs(transport_solve(rel, t, y, xi, &src, 0.0) - expected), 0.0, 1e-10);
}

TEST(Characteristic, RejectsOddSteps) {
  auto s = exact_setup(1);
  EXPECT_THROW(characteristic(s, 0.5, make_vec({0.0}), make_vec({2.0}), 3), ConfigError);
}

TEST(Characteristic, FreeFlowIsStraight) {
  auto s = exact_setup(2);
  auto c = characteristic(s, 1.0, make_vec({0.0, 0.0}), make_vec({3.0, 4.0}), 10);
  EXPECT_LT((c.x.back() - make_vec({0.6, 0.8})).norm(), 1e-14);
  EXPECT_EQ(c.eta.back(), c.xi);
}

TEST(LeadingSymbol, ExactCaseAndInitialTime) {
  auto s = exact_setup(1);
  Grid g(1, 32, 4.0);
  EXPECT_LT((leading_symbol(s, 0.7, g).array() - 1.0).abs().maxCoeff(), 1e-14);
  auto a = make_transport_setup(aniso(1, 0.3), zero_field(1), zero_potential(1));
  EXPECT_LT((leading_symbol(a, 0.0, g).array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(LeadingSymbol, RelativisticHasUnitModulus) {
  auto s = relativistic_setup(1);
  Grid g(1, 32, 4.0);
  auto b = leading_symbol(s, 0.9, g);
  EXPECT_LT((b.array().abs() - 1.0).abs().maxCoeff(), 1e-8);
  EXPECT_GT((b.array() - 1.0).abs().maxCoeff(), 1e-3);
}

TEST(LeadingSymbol, ColumnFastPathMatchesCharacteristics) {
  auto s = make_transport_setup(perturbed(1), zero_field(1), zero_potential(1));
  Grid g(1, 16, 3.0);
  auto b = leading_symbol(s, 0.5, g);
  for (long k : {3L, 12L}) {
    for (long i : {0L, 7L}) {
      Vec x = g.point(i), xi = g.freq(k);
      Vec y = characteristic_start(s, 0.5, x, xi);
      EXPECT_NEAR(std::abs(b(i, k) - transport_solve(s, 0.5, y, xi, nullptr, 1.0)), 0.0, 1e-12);
    }
  }
}

TEST(CorrectionSource, VanishesInExactCase) {
  auto s = exact_setup(1);
  Quantizer q(Grid(1, 32, 2.0 * kPi), zero_potential(1));
  for (double t : {0.0, 0.4}) {
    auto f = correction_source(s, t, leading_symbol(s, t, q.grid()), q);
    EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-6) << "t = " << t;
  }
}

TEST(CorrectionSource, InitialTimeIsFinite) {
  auto s = make_transport_setup(aniso(1, 0.3), zero_field(1), zero_potential(1));
  Quantizer q(Grid(1, 32, 4.0), zero_potential(1));
  auto f = correction_source(s, 0.0, leading_symbol(s, 0.0, q.grid()), q);
  EXPECT_TRUE(f.allFinite());
}

TEST(FioPropagator, IdentityAtZero) {
  auto B = bump_field(0.5, 2.0);
  auto s = make_transport_setup(aniso(2, 0.3), B, transverse_gauge(B));
  Quantizer q(Grid(2, 8, 3.0), s.A);
  auto pb = fio_propagator(s, 0.0, q, PropagatorOptions{1, 4, true});
  ASSERT_TRUE(pb.op.has_value());
  EXPECT_LT(identity_error(*pb.op), 1e-10);
  ASSERT_TRUE(pb.b1.has_value());
  EXPECT_EQ(pb.b1->cwiseAbs().maxCoeff(), 0.0);
}

TEST(FioPropagator, ExactCaseMatchesMultiplier) {
  auto s = exact_setup(1);
  Grid g(1, 64, 8.0);
  Quantizer q(g, zero_potential(1));
  const double t = 0.5;
  auto pb = fio_propagator(s, t, q);
  WaveFunction u = wave_packet(g, make_vec({-1.0}), make_vec({4.0}), 0.7);
  WaveFunction v = apply_propagator(pb, q, u);
  WaveFunction w = fourier_multiplier(g, [&](const Vec& xi) { return std::polar(1.0, -t * s.abar0(xi, xi).real()); }, u);
  EXPECT_LT(rel_diff(v.values, w.values), 1e-8);
}

TEST(FioPropagator, ApproximatelyUnitaryOnPackets) {
  auto B = bump_field(0.5, 2.0);
  auto s = make_transport_setup(aniso(2, 0.3), B, transverse_gauge(B));
  Grid g(2, 8, 3.0);
  Quantizer q(g, s.A);
  auto pb = fio_propagator(s, 0.2, q);
  WaveFunction u = wave_packet(g, make_vec({0.0, 0.0}), make_vec({2.0, 0.0}), 0.8);
  u.values /= u.norm();
  const double n = apply_propagator(pb, q, u).norm();
  EXPECT_GE(n, 0.9);
  EXPECT_LE(n, 1.1);
}

TEST(FioPropagator, RejectsUnsupportedOrder) {
  auto s = exact_setup(1);
  Quantizer q(Grid(1, 16, 4.0), zero_potential(1));
  EXPECT_THROW(fio_propagator(s, 0.1, q, PropagatorOptions{2, 4, true}), ConfigError);
}

TEST(ReferencePropagator, IdentityUnitarityAndMultiplier) {
  Grid g(1, 64, 8.0);
  Quantizer q(g, zero_potential(1));
  Symbol a = relativistic(1);
  ReferencePropagator ref(q, a);
  EXPECT_LT(identity_error(ref.at(0.0)), 1e-10);
  WaveFunction u(g, magfio::testing::random_vector(g.size(), 5));
  const double t = 0.8;
  WaveFunction v = ref.apply(t, u);
  EXPECT_NEAR(v.norm() / u.norm(), 1.0, 1e-10);
  WaveFunction w = fourier_multiplier(g, [&](const Vec& xi) { return std::polar(1.0, -t * a(xi, xi).real()); }, u);
  EXPECT_LT(rel_diff(v.values, w.values), 1e-9);
  EXPECT_LT(rel_diff(ref.at(t).apply(u).values, v.values), 1e-12);
}

TEST(ReferencePropagator, MagneticUnitarity) {
  auto B = bump_field(0.5, 2.0);
  Grid g(2, 8, 3.0);
  Quantizer q(g, transverse_gauge(B));
  ReferencePropagator ref(q, aniso(2, 0.3));
  EXPECT_LT(ref.hermiticity_defect(), 1e-12);
  GridOperator U = ref.at(0.7);
  DenseMatrix I = DenseMatrix::Identity(g.size(), g.size());
  EXPECT_LT((U.matrix.adjoint() * U.matrix - I).norm(), 1e-10);
}

TEST(WavepacketTrack, InitialCentres) {
  auto s = exact_setup(1);
  Grid g(1, 128, 16.0);
  ReferencePropagator ref(Quantizer(g, zero_potential(1)), homog_relativistic(1, 1.0));
  auto c = wavepacket_track(s, ref, make_vec({-2.0}), make_vec({6.0}), 1.0, {0.0});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_LT(c[0].position_deviation, g.h());
  EXPECT_LT(c[0].frequency_deviation, 1.0);
  EXPECT_FALSE(c[0].wrapped);
}

TEST(WavepacketTrack, FreeGroupVelocity) {
  auto s = exact_setup(1);
  Grid g(1, 128, 16.0);
  ReferencePropagator ref(Quantizer(g, zero_potential(1)), homog_relativistic(1, 1.0));
  const double sigma = 1.0;
  auto cs = wavepacket_track(s, ref, make_vec({-2.0}), make_vec({6.0}), sigma, {0.5, 1.0, 2.0});
  for (const auto& c : cs) {
    EXPECT_NEAR(c.predicted_position(0), -2.0 + c.t, 1e-10);
    EXPECT_LT(c.position_deviation, 0.5 * sigma * c.t) << "t = " << c.t;
    EXPECT_LT(c.frequency_deviation, 1.0);
  }
}

TEST(KernelDecay, DeltaCaseAtZero) {
  auto s = relativistic_setup(1);
  Grid g(1, 64, 8.0);
  ReferencePropagator ref(Quantizer(g, zero_potential(1)), relativistic(1));
  auto fit = kernel_decay_probe(s, ref, 0.0, make_vec({0.0}));
  EXPECT_TRUE(fit.delta_case);
}

TEST(KernelDecay, LightSetOfRelativisticCone) {
  auto s = relativistic_setup(1);
  auto pts = light_set(s, 1.5, make_vec({0.5}));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0](0), 2.0, 1e-10);
  EXPECT_NEAR(pts[1](0), -1.0, 1e-10);
}
