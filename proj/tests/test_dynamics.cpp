#include "magfio/dynamics/flow.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace magfio;

namespace {

// Frozen from tests/oracles/generate.py (DOP853, rtol 1e-13).
constexpr double kFlowX = 1.2046069837751041;
constexpr double kFlowXi = 1.8125493702162976;
constexpr double kFlowAction = -0.6034224470200273;

FlowOptions steps(int n, bool variational = true) {
  FlowOptions o;
  o.steps = n;
  o.variational = variational;
  return o;
}

}  // namespace

TEST(HamiltonianFlow, MatchesIndependentIntegrator) {
  auto tr = hamiltonian_flow(aniso(1, 0.3), join(make_vec({0.3}), make_vec({2.0})), 1.0, steps(1000));
  EXPECT_NEAR(tr.x()(0), kFlowX, 1e-10);
  EXPECT_NEAR(tr.xi()(0), kFlowXi, 1e-10);
  EXPECT_NEAR(simpson<double>(tr.action_density, 1.0 / 1000), kFlowAction, 1e-10);
}

TEST(HamiltonianFlow, XIndependentFlowIsAffine) {
  Symbol a = relativistic(2);
  Vec y = make_vec({0.5, -1.0}), eta = make_vec({3.0, 4.0});
  auto tr = hamiltonian_flow(a, join(y, eta), 0.7, steps(50));
  EXPECT_LT((tr.x() - (y + 0.7 * eta / std::sqrt(26.0))).norm(), 1e-13);
  EXPECT_LT((tr.xi() - eta).norm(), 1e-15);
}

TEST(HamiltonianFlow, ZeroTimeIsIdentity) {
  PhaseVec Y = join(make_vec({0.5, -1.0}), make_vec({3.0, 4.0}));
  auto tr = hamiltonian_flow(aniso(2, 0.3), Y, 0.0, steps(10));
  EXPECT_LT((tr.final_state() - Y).norm(), 1e-15);
  EXPECT_LT((tr.final_jacobian() - PhaseMat::Identity(4, 4)).norm(), 1e-15);
  EXPECT_EQ(symplectic_defect(tr), 0.0);
}

TEST(HamiltonianFlow, InvariantsAndFourthOrderConvergence) {
  Symbol a = aniso(1, 0.3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(-3.0, 3.0), ue(-6.0, 6.0);
  for (int s = 0; s < 10; ++s) {
    PhaseVec Y = join(make_vec({ux(rng)}), make_vec({ue(rng)}));
    auto fine = hamiltonian_flow(a, Y, 1.0, steps(1000));
    EXPECT_LT(energy_defect(a, fine), 1e-8);
    EXPECT_LT(symplectic_defect(fine), 1e-6);
  }
  PhaseVec Y = join(make_vec({0.3}), make_vec({2.0}));
  double e1 = energy_defect(a, hamiltonian_flow(a, Y, 1.0, steps(100)));
  double e2 = energy_defect(a, hamiltonian_flow(a, Y, 1.0, steps(50)));
  EXPECT_GT(e2 / e1, 8.0);
  EXPECT_LT(e2 / e1, 32.0);
}

struct HalfXiSquared {
  static constexpr bool real = true;
  template <class S>
  S operator()(const S*, const S* xi) const { return (xi[0] * xi[0] + xi[1] * xi[1]) * 0.5; }
};

TEST(HamiltonianFlow, LinearFlowIsSymplecticToRoundoff) {
  Symbol a = make_formula_symbol(2, HalfXiSquared{}, symbol_info("half_xi2", 2.0, true));
  auto tr = hamiltonian_flow(a, join(make_vec({0.1, 0.2}), make_vec({1.0, -2.0})), 1.3, steps(100));
  EXPECT_LT(symplectic_defect(tr), 1e-12);
}

TEST(HamiltonianFlow, RejectsBadInput) {
  EXPECT_THROW(hamiltonian_flow(twisted(1, 0.3, 0.3), join(make_vec({0.0}), make_vec({1.0})), 1.0), ConfigError);
  EXPECT_THROW(hamiltonian_flow(aniso(2, 0.3), join(make_vec({0.0}), make_vec({1.0})), 1.0), ConfigError);
  EXPECT_THROW(hamiltonian_flow(aniso(1, 0.3), join(make_vec({0.0}), make_vec({1.0})), 1.0, steps(0)), ConfigError);
}

TEST(Homogeneity, ExactForAbsXiAndSmallForAniso) {
  PhaseVec Y = join(make_vec({0.3, -0.2}), make_vec({0.6, 0.8}));
  EXPECT_LT(homogeneity_check(abs_xi(2), Y, 4.0, 1.0), 1e-9);
  EXPECT_EQ(homogeneity_check(abs_xi(2), Y, 1.0, 1.0), 0.0);
  Symbol p = tilted(2, 0.3).principal();
  EXPECT_LT(homogeneity_check(p, Y, 4.0, 1.0, 2000), 1e-7);
}

TEST(FlowWindow, Examples) {
  auto samples = phase_samples(1, 16, 3.0, 20.0);
  EXPECT_EQ(flow_window(relativistic(1), samples, 2.0, 0.5).T, 2.0);
  auto w = flow_window(aniso(1, 0.3), samples, 5.0, 0.5);
  EXPECT_GT(w.T, 0.0);
  EXPECT_LE(w.worst, 0.5 + 1e-6);
  auto w2 = flow_window(aniso(1, 0.3), samples, 5.0, 0.5, 400);
  EXPECT_LE(std::abs(w2.T - w.T), 1e-3 + 1e-12);
  EXPECT_LT(flow_window(aniso(1, 0.3), samples, 5.0, 1e-4).T, 0.05 * w.T + 1e-3);
}
