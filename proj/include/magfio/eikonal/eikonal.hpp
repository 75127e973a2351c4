#pragma once

#include "magfio/dynamics/flow.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <mutex>
#include <optional>
#include <unordered_map>

namespace magfio {

struct EikonalOptions {
  int steps_per_unit = 500;
  int min_steps = 16;
  double newton_tol = 1e-12;   // target ||x(t; y, eta) - x||_inf / (1 + |x|)
  double accept_tol = 1e-10;   // accepted when Newton stagnates below this
  int max_iterations = 50;
  std::size_t cache_capacity = 0;  // 0 disables the point cache
};

// U(t; x, eta) and its first and second derivatives.
struct EikonalPoint {
  double U = 0.0;
  Vec grad_x;     // = xi(t; y, eta)
  Vec grad_eta;   // = y = f(t; x, eta)
  Mat hess_xx;
  Mat hess_xeta;  // (j, k) = d^2 U / dx_j deta_k
  Mat hess_etaeta;
  Vec y;
  Mat dx_dy;      // Jacobian of y -> x(t; y, eta) at the solution
  int iterations = 0;
};

struct DPart {
  double value = 0.0;     // d_t(x, eta) = U - <x, eta>
  Vec grad_eta;           // grad_eta d
  Mat mixed_hessian;      // d^2 d / dx deta
  double mixed_norm = 0.0;
};

class Eikonal {
 public:
  explicit Eikonal(Symbol a, EikonalOptions opt = {}, double window = std::numeric_limits<double>::infinity())
      : a_(std::move(a)), opt_(opt), window_(window) {
    if (!a_.is_real()) throw ConfigError("eikonal: Hamiltonian '" + a_.name() + "' must be real");
    if (opt_.cache_capacity > 0) cache_ = std::make_shared<Cache>();
  }

  const Symbol& hamiltonian() const { return a_; }
  const EikonalOptions& options() const { return opt_; }
  double window() const { return window_; }
  int dim() const { return a_.dim(); }

  int steps_for(double t) const {
    int n = std::max(opt_.min_steps, static_cast<int>(std::ceil(std::abs(t) * opt_.steps_per_unit)));
    return n + (n % 2);
  }

  Trajectory trajectory(double t, const Vec& y, const Vec& eta, bool variational = true) const {
    FlowOptions fo;
    fo.steps = steps_for(t);
    fo.variational = variational;
    return hamiltonian_flow(a_, join(y, eta), t, fo);
  }

  // Q(t; y, eta) = <y, eta> + int_0^t (<xi, grad_xi a> - a) ds along the
  // trajectory through (y, eta).
  double action(double t, const Vec& y, const Vec& eta) const {
    if (t == 0.0) return y.dot(eta);
    auto tr = trajectory(t, y, eta, false);
    return action_from(tr, t, y, eta);
  }

  // Solve x(t; y, eta) = x for y.
  struct Inversion {
    Vec y;
    int iterations = 0;
    Trajectory trajectory;
  };

  Inversion invert(double t, const Vec& x, const Vec& eta, const Vec* guess = nullptr) const {
    check_window(t);
    const int d = dim();
    Inversion inv;
    if (guess) {
      inv.y = *guess;
    } else {
      HamiltonianJet h = hamiltonian_jet(a_, join(x, eta), 1);
      inv.y = x - t * h.grad.tail(d);
    }
    const double scale = 1.0 + x.cwiseAbs().maxCoeff();
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt_.max_iterations; ++it) {
      inv.trajectory = trajectory(t, inv.y, eta, true);
      Vec F = inv.trajectory.x() - x;
      const double res = F.cwiseAbs().maxCoeff();
      inv.iterations = it;
      if (!std::isfinite(res)) break;
      if (res <= opt_.newton_tol * scale) return inv;
      if (res <= opt_.accept_tol * scale && res >= 0.5 * prev) return inv;
      prev = res;
      Mat A = inv.trajectory.dx_dy();
      inv.y -= A.partialPivLu().solve(F);
    }
    throw ConvergenceError("eikonal: Newton inversion of the flow did not converge at t = " + std::to_string(t));
  }

  EikonalPoint evaluate(double t, const Vec& x, const Vec& eta, const Vec* guess = nullptr) const {
    if (cache_) {
      if (auto hit = cache_->find(t, x, eta)) return *std::move(hit);
    }
    EikonalPoint p = a_.x_independent() ? evaluate_free(t, x, eta) : evaluate_general(t, x, eta, guess);
    if (cache_) cache_->insert(t, x, eta, p, opt_.cache_capacity);
    return p;
  }

  double U(double t, const Vec& x, const Vec& eta) const { return evaluate(t, x, eta).U; }

  DPart d_part(double t, const Vec& x, const Vec& eta) const {
    EikonalPoint p = evaluate(t, x, eta);
    DPart r;
    r.value = p.U - x.dot(eta);
    r.grad_eta = p.grad_eta - x;
    r.mixed_hessian = p.hess_xeta - Mat::Identity(dim(), dim());
    r.mixed_norm = Eigen::JacobiSVD<Mat>(r.mixed_hessian).singularValues()(0);
    return r;
  }

  // Centered-difference residual of dU/dt + a(x, grad_x U).
  double hj_residual(double t, const Vec& x, const Vec& eta, double dt = 1e-3) const {
    const double up = evaluate(t + dt, x, eta).U;
    const double um = evaluate(t - dt, x, eta).U;
    EikonalPoint p = evaluate(t, x, eta);
    return (up - um) / (2.0 * dt) + a_(x, p.grad_x).real();
  }

  // Evaluate on all pairs (xs[i], etas[k]); callback(i, k, point). Newton is
  // warm-started along each eta column.
  template <class Callback>
  void for_each_point(double t, const std::vector<Vec>& xs, const std::vector<Vec>& etas, Callback&& cb) const {
    const long nk = static_cast<long>(etas.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long k = 0; k < nk; ++k) {
      const Vec& eta = etas[static_cast<std::size_t>(k)];
      bool have_prev = false;
      Vec y_prev, x_prev;
      Mat A_prev;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec& x = xs[i];
        EikonalPoint p;
        if (have_prev && !a_.x_independent()) {
          Vec guess = y_prev + A_prev.partialPivLu().solve(x - x_prev);
          p = evaluate(t, x, eta, &guess);
        } else {
          p = evaluate(t, x, eta);
        }
        y_prev = p.y;
        x_prev = x;
        A_prev = p.dx_dy;
        have_prev = true;
        cb(i, static_cast<std::size_t>(k), p);
      }
    }
  }

 private:
  void check_window(double t) const {
    if (std::abs(t) >= window_)
      throw ConfigError("eikonal: |t| = " + std::to_string(std::abs(t)) + " is outside the flow window T = " +
                        std::to_string(window_));
  }

  double action_from(const Trajectory& tr, double t, const Vec& y, const Vec& eta) const {
    const double h = t / (static_cast<double>(tr.action_density.size()) - 1.0);
    return y.dot(eta) + simpson<double>(tr.action_density, h);
  }

  EikonalPoint evaluate_free(double t, const Vec& x, const Vec& eta) const {
    check_window(t);
    const int d = dim();
    HamiltonianJet h = hamiltonian_jet(a_, join(x, eta), 2);
    EikonalPoint p;
    p.U = x.dot(eta) - t * h.value;
    p.grad_x = eta;
    p.grad_eta = x - t * h.grad.tail(d);
    p.hess_xx = Mat::Zero(d, d);
    p.hess_xeta = Mat::Identity(d, d);
    p.hess_etaeta = -t * h.hess.bottomRightCorner(d, d);
    p.y = p.grad_eta;
    p.dx_dy = Mat::Identity(d, d);
    p.iterations = 0;
    return p;
  }

  EikonalPoint evaluate_general(double t, const Vec& x, const Vec& eta, const Vec* guess) const {
    const int d = dim();
    EikonalPoint p;
    if (t == 0.0) {
      p.U = x.dot(eta);
      p.grad_x = eta;
      p.grad_eta = x;
      p.hess_xx = Mat::Zero(d, d);
      p.hess_xeta = Mat::Identity(d, d);
      p.hess_etaeta = Mat::Zero(d, d);
      p.y = x;
      p.dx_dy = Mat::Identity(d, d);
      return p;
    }
    Inversion inv = invert(t, x, eta, guess);
    const Trajectory& tr = inv.trajectory;
    p.y = inv.y;
    p.iterations = inv.iterations;
    p.U = action_from(tr, t, inv.y, eta);
    p.grad_x = tr.xi();
    p.grad_eta = inv.y;
    Mat A = tr.dx_dy();
    auto lu = A.partialPivLu();
    Mat Ainv = lu.inverse();
    p.dx_dy = A;
    p.hess_xx = tr.dxi_dy() * Ainv;
    p.hess_xeta = Ainv.transpose();
    p.hess_etaeta = -Ainv * tr.dx_deta();
    return p;
  }

  class Cache {
   public:
    std::optional<EikonalPoint> find(double t, const Vec& x, const Vec& eta) {
      std::lock_guard lock(m_);
      auto it = map_.find(key(t, x, eta));
      if (it == map_.end()) return std::nullopt;
      return it->second;
    }
    void insert(double t, const Vec& x, const Vec& eta, const EikonalPoint& p, std::size_t cap) {
      std::lock_guard lock(m_);
      if (map_.size() >= cap) map_.clear();
      map_.emplace(key(t, x, eta), p);
    }

   private:
    static std::string key(double t, const Vec& x, const Vec& eta) {
      std::string k(sizeof(double) * static_cast<std::size_t>(1 + x.size() + eta.size()), '\0');
      char* p = k.data();
      std::memcpy(p, &t, sizeof(double));
      std::memcpy(p + sizeof(double), x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
      std::memcpy(p + sizeof(double) * static_cast<std::size_t>(1 + x.size()), eta.data(),
                  sizeof(double) * static_cast<std::size_t>(eta.size()));
      return k;
    }
    std::mutex m_;
    std::unordered_map<std::string, EikonalPoint> map_;
  };

  Symbol a_;
  EikonalOptions opt_;
  double window_;
  std::shared_ptr<Cache> cache_;
};

struct IdentityDefect {
  double grad_x = 0.0;    // |grad_x U (finite differences) - xi(t; y, eta)|
  double grad_eta = 0.0;  // |grad_eta U (finite differences) - y|
  double flow = 0.0;      // |Phi_t(y, eta) - (x, grad_x U)| with y from the inversion
  double worst() const { return std::max({grad_x, grad_eta, flow}); }
};

// Checks grad_x U = xi(t; f, eta) and grad_eta U = f against fourth-order
// central differences of U, plus an independent forward flow from f.
inline IdentityDefect identity_defect(const Eikonal& eik, double t, const Vec& x, const Vec& eta, double h = 1e-3) {
  const int d = eik.dim();
  EikonalPoint p = eik.evaluate(t, x, eta);
  auto fd = [&](bool in_x, int k) {
    auto U = [&](double s) {
      Vec xx = x, ee = eta;
      (in_x ? xx : ee)(k) += s;
      return eik.evaluate(t, xx, ee).U;
    };
    return (8.0 * (U(h) - U(-h)) - (U(2 * h) - U(-2 * h))) / (12.0 * h);
  };
  IdentityDefect r;
  for (int k = 0; k < d; ++k) {
    r.grad_x = std::max(r.grad_x, std::abs(fd(true, k) - p.grad_x(k)));
    r.grad_eta = std::max(r.grad_eta, std::abs(fd(false, k) - p.grad_eta(k)));
  }
  Trajectory tr = eik.trajectory(t, p.y, eta, false);
  r.flow = std::max((tr.x() - x).cwiseAbs().maxCoeff(), (tr.xi() - p.grad_x).cwiseAbs().maxCoeff());
  return r;
}

// f(t; x, eta): solution y of x(t; y, eta) = x.
inline Vec invert_flow_x(const Eikonal& eik, double t, const Vec& x, const Vec& eta) {
  return eik.evaluate(t, x, eta).y;
}

inline double generating_function(const Eikonal& eik, double t, const Vec& x, const Vec& eta) {
  return eik.evaluate(t, x, eta).U;
}

struct MatchRadius {
  double R = 0.0;
  double max_flow_mismatch = 0.0;
  bool verified = false;
};

// Smallest sampled R >= 2 rho such that trajectories of the homogeneous a0
// started with |eta| >= R keep |xi(t)| >= 2 rho for |t| <= T, so that the
// flows of chi_rho a0 and a0 agree there.
inline MatchRadius match_radius(const Symbol& a0, double rho, const std::vector<PhasePoint>& samples, double T,
                                int steps = 400, double growth = 1.05) {
  const int d = a0.dim();
  FlowOptions fo;
  fo.steps = steps;
  fo.variational = false;
  double min_ratio = std::numeric_limits<double>::infinity();
  std::vector<PhaseVec> starts;
  for (const auto& p : samples) {
    if (p.xi.norm() == 0.0) continue;
    Vec dir = p.xi / p.xi.norm();
    starts.push_back(join(p.x, dir));
    for (double sign : {1.0, -1.0}) {
      if (T == 0.0) continue;
      auto tr = hamiltonian_flow(a0, join(p.x, dir), sign * T, fo);
      for (const auto& X : tr.states) min_ratio = std::min(min_ratio, X.tail(d).norm());
    }
  }
  MatchRadius r;
  if (starts.empty()) throw ConfigError("match_radius: no sample with nonzero frequency");
  if (T == 0.0) min_ratio = 1.0;
  double R = 2.0 * rho;
  // Homogeneity gives |xi(t; y, R w)| = R |xi(t; y, w)|.
  while (R * min_ratio < 2.0 * rho * (1.0 - 1e-12)) R *= growth;
  r.R = R;
  Symbol truncated = principal_truncation(a0, rho);
  for (const auto& s : starts) {
    PhaseVec Y = s;
    Y.tail(d) *= R;
    for (double sign : {1.0, -1.0}) {
      if (T == 0.0) continue;
      auto f0 = hamiltonian_flow(a0, Y, sign * T, fo);
      auto f1 = hamiltonian_flow(truncated, Y, sign * T, fo);
      r.max_flow_mismatch = std::max(r.max_flow_mismatch, (f0.final_state() - f1.final_state()).norm());
    }
  }
  r.verified = r.max_flow_mismatch <= 1e-9 * (1.0 + R);
  return r;
}

}  // namespace magfio
