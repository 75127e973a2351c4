#pragma once

#include "magfio/core/quadrature.hpp"
#include "magfio/symbols/conversions.hpp"

#include <cmath>
#include <vector>

namespace magfio {

// Value, gradient and Hessian of a real Hamiltonian in (x, xi).
struct HamiltonianJet {
  double value = 0.0;
  PhaseVec grad;
  PhaseMat hess;
};

inline HamiltonianJet hamiltonian_jet(const Symbol& a, const PhaseVec& X, int order) {
  const int n = static_cast<int>(X.size());
  ComplexJet j = a.jet(head(X), tail(X), order);
  HamiltonianJet h;
  h.value = j.value().real();
  h.grad.resize(n);
  for (int v = 0; v < n; ++v) h.grad(v) = j.partial(v).real();
  if (order >= 2) {
    h.hess.resize(n, n);
    for (int v = 0; v < n; ++v)
      for (int w = v; w < n; ++w) h.hess(v, w) = h.hess(w, v) = j.partial(v, w).real();
  }
  return h;
}

struct FlowOptions {
  int steps = 1000;
  bool variational = true;
  bool keep_path = true;
};

struct Trajectory {
  int dim = 0;
  std::vector<double> times;
  std::vector<PhaseVec> states;
  std::vector<PhaseMat> jacobians;  // d Phi_t / dY, when requested
  std::vector<double> action_density;  // <xi, grad_xi a> - a at each node

  const PhaseVec& final_state() const { return states.back(); }
  const PhaseMat& final_jacobian() const { return jacobians.back(); }
  Vec x() const { return head(states.back()); }
  Vec xi() const { return tail(states.back()); }
  // Blocks of the final Jacobian: d x / d y, d x / d eta, d xi / d y, d xi / d eta.
  Mat dx_dy() const { return jacobians.back().topLeftCorner(dim, dim); }
  Mat dx_deta() const { return jacobians.back().topRightCorner(dim, dim); }
  Mat dxi_dy() const { return jacobians.back().bottomLeftCorner(dim, dim); }
  Mat dxi_deta() const { return jacobians.back().bottomRightCorner(dim, dim); }
};

namespace detail {

inline PhaseVec hamiltonian_field(const HamiltonianJet& h, int d) {
  PhaseVec f(2 * d);
  f.head(d) = h.grad.tail(d);
  f.tail(d) = -h.grad.head(d);
  return f;
}

inline PhaseMat hamiltonian_field_derivative(const HamiltonianJet& h, int d) {
  PhaseMat D(2 * d, 2 * d);
  D.topRows(d) = h.hess.bottomRows(d);
  D.bottomRows(d) = -h.hess.topRows(d);
  return D;
}

inline void check_state(const Symbol& a, const PhaseVec& X, int d, double t) {
  if (!X.allFinite()) throw FlowError("hamiltonian flow: non-finite state at t = " + std::to_string(t));
  if (a.xi_floor() > 0.0 && X.tail(d).norm() < a.xi_floor())
    throw FlowError("hamiltonian flow: |xi| fell below the symbol's xi_floor at t = " + std::to_string(t));
}

}  // namespace detail

// RK4 integration of dX/dt = H_a(X) = (grad_xi a, -grad_x a) from X(0) = Y,
// optionally with the variational equation dJ/dt = DH_a(X) J, J(0) = I.
inline Trajectory hamiltonian_flow(const Symbol& a, const PhaseVec& Y, double t, const FlowOptions& opt = {}) {
  const int n = static_cast<int>(Y.size());
  const int d = n / 2;
  require(n == 2 * a.dim(), "hamiltonian_flow: state dimension mismatch");
  require(opt.steps >= 1, "hamiltonian_flow: steps must be >= 1");
  if (!a.is_real()) throw ConfigError("hamiltonian_flow: symbol '" + a.name() + "' is not real");
  const int order = opt.variational ? 2 : 1;
  const double dt = t / opt.steps;

  Trajectory tr;
  tr.dim = d;
  const std::size_t keep = opt.keep_path ? static_cast<std::size_t>(opt.steps) + 1 : 2;
  tr.times.reserve(keep);
  tr.states.reserve(keep);
  tr.action_density.reserve(keep);
  if (opt.variational) tr.jacobians.reserve(keep);

  PhaseVec X = Y;
  PhaseMat J = PhaseMat::Identity(n, n);
  detail::check_state(a, X, d, 0.0);

  auto record = [&](double time, const HamiltonianJet& h) {
    tr.times.push_back(time);
    tr.states.push_back(X);
    tr.action_density.push_back(X.tail(d).dot(h.grad.tail(d)) - h.value);
    if (opt.variational) tr.jacobians.push_back(J);
  };

  HamiltonianJet h1 = hamiltonian_jet(a, X, order);
  record(0.0, h1);
  for (int s = 0; s < opt.steps; ++s) {
    PhaseVec k1 = detail::hamiltonian_field(h1, d);
    PhaseVec X2 = X + 0.5 * dt * k1;
    detail::check_state(a, X2, d, (s + 0.5) * dt);
    HamiltonianJet h2 = hamiltonian_jet(a, X2, order);
    PhaseVec k2 = detail::hamiltonian_field(h2, d);
    PhaseVec X3 = X + 0.5 * dt * k2;
    detail::check_state(a, X3, d, (s + 0.5) * dt);
    HamiltonianJet h3 = hamiltonian_jet(a, X3, order);
    PhaseVec k3 = detail::hamiltonian_field(h3, d);
    PhaseVec X4 = X + dt * k3;
    detail::check_state(a, X4, d, (s + 1.0) * dt);
    HamiltonianJet h4 = hamiltonian_jet(a, X4, order);
    PhaseVec k4 = detail::hamiltonian_field(h4, d);

    if (opt.variational) {
      PhaseMat D1 = detail::hamiltonian_field_derivative(h1, d);
      PhaseMat D2 = detail::hamiltonian_field_derivative(h2, d);
      PhaseMat D3 = detail::hamiltonian_field_derivative(h3, d);
      PhaseMat D4 = detail::hamiltonian_field_derivative(h4, d);
      PhaseMat K1 = D1 * J;
      PhaseMat K2 = D2 * (J + 0.5 * dt * K1);
      PhaseMat K3 = D3 * (J + 0.5 * dt * K2);
      PhaseMat K4 = D4 * (J + dt * K3);
      J += (dt / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
    }
    X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double time = (s + 1) * dt;
    detail::check_state(a, X, d, time);
    h1 = hamiltonian_jet(a, X, order);
    if (opt.keep_path || s + 1 == opt.steps) record(time, h1);
  }
  return tr;
}

inline double energy_defect(const Symbol& a, const Trajectory& tr) {
  const int d = tr.dim;
  const double e0 = a(tr.states.front().head(d), tr.states.front().tail(d)).real();
  double worst = 0.0;
  for (const auto& X : tr.states) worst = std::max(worst, std::abs(a(X.head(d), X.tail(d)).real() - e0));
  return worst;
}

inline PhaseMat symplectic_form(int d) {
  PhaseMat Jm = PhaseMat::Zero(2 * d, 2 * d);
  Jm.topRightCorner(d, d) = Mat::Identity(d, d);
  Jm.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  return Jm;
}

// max over recorded nodes of ||M^T J M - J||_F.
inline double symplectic_defect(const Trajectory& tr) {
  if (tr.jacobians.empty()) throw ConfigError("symplectic_defect: trajectory has no Jacobians");
  const PhaseMat Jm = symplectic_form(tr.dim);
  double worst = 0.0;
  for (const auto& M : tr.jacobians) worst = std::max(worst, (M.transpose() * Jm * M - Jm).norm());
  return worst;
}

// Homogeneity defect of a degree-1 Hamiltonian: compare Phi_t(y, lambda eta)
// with (x, lambda xi) where (x, xi) = Phi_t(y, eta).
inline double homogeneity_check(const Symbol& a0, const PhaseVec& Y, double lambda, double t, int steps = 2000) {
  const int d = static_cast<int>(Y.size()) / 2;
  FlowOptions opt;
  opt.steps = steps;
  opt.variational = false;
  opt.keep_path = false;
  PhaseVec Yl = Y;
  Yl.tail(d) *= lambda;
  auto base = hamiltonian_flow(a0, Y, t, opt);
  auto scaled = hamiltonian_flow(a0, Yl, t, opt);
  double dx = (scaled.x() - base.x()).norm();
  double dxi = (scaled.xi() - lambda * base.xi()).norm();
  return std::max(dx, dxi);
}

struct FlowWindow {
  double T = 0.0;
  double worst = 0.0;  // sup ||I - dx/dy|| over samples and |t| <= T
};

// Largest T <= t_max (resolution 1e-3) such that ||I - dx/dy(t; Y)||_2 <= delta
// for all samples and |t| <= T.
inline FlowWindow flow_window(const Symbol& a, const std::vector<PhasePoint>& samples, double t_max, double delta,
                             int steps_per_unit = 200, double resolution = 1e-3) {
  FlowWindow w;
  if (a.x_independent()) {
    w.T = t_max;
    return w;
  }
  const int d = a.dim();
  auto deviation = [d](const PhaseMat& J) {
    Mat D = Mat::Identity(d, d) - J.topLeftCorner(d, d);
    return Eigen::JacobiSVD<Mat>(D).singularValues()(0);
  };
  // First crossing per sample in each direction, located on the step grid
  // and refined by bisection.
  auto crossing = [&](const PhasePoint& p, double sign) {
    const int steps = std::max(8, static_cast<int>(std::ceil(t_max * steps_per_unit)));
    FlowOptions opt;
    opt.steps = steps;
    auto tr = hamiltonian_flow(a, join(p.x, p.xi), sign * t_max, opt);
    for (std::size_t k = 1; k < tr.jacobians.size(); ++k) {
      if (deviation(tr.jacobians[k]) > delta) {
        double lo = std::abs(tr.times[k - 1]), hi = std::abs(tr.times[k]);
        while (hi - lo > resolution) {
          double mid = 0.5 * (lo + hi);
          FlowOptions o2;
          o2.steps = std::max(4, static_cast<int>(std::ceil(mid * steps_per_unit)));
          o2.keep_path = false;
          auto tm = hamiltonian_flow(a, join(p.x, p.xi), sign * mid, o2);
          (deviation(tm.final_jacobian()) > delta ? hi : lo) = mid;
        }
        return lo;
      }
    }
    return t_max;
  };
  double T = t_max;
  for (const auto& p : samples) {
    T = std::min(T, crossing(p, 1.0));
    T = std::min(T, crossing(p, -1.0));
    if (T <= 0.0) break;
  }
  w.T = std::floor(T / resolution) * resolution;
  for (const auto& p : samples) {
    if (w.T <= 0.0) break;
    FlowOptions opt;
    opt.steps = std::max(8, static_cast<int>(std::ceil(w.T * steps_per_unit)));
    for (double sign : {1.0, -1.0}) {
      auto tr = hamiltonian_flow(a, join(p.x, p.xi), sign * w.T, opt);
      for (const auto& J : tr.jacobians) w.worst = std::max(w.worst, deviation(J));
    }
  }
  return w;
}

}  // namespace magfio
