#pragma once

#include "magfio/quantize/quantize.hpp"

#include <functional>
#include <limits>

namespace magfio {

// Generating function U(x, eta) with analytic gradients and Hessians: either
// the standard phase <x, eta> or an eikonal at fixed time.
class PhaseFunction {
 public:
  static PhaseFunction standard(int d) {
    PhaseFunction p;
    p.d_ = d;
    p.name_ = "standard";
    return p;
  }

  static PhaseFunction from_eikonal(Eikonal eik, double t) {
    PhaseFunction p;
    p.d_ = eik.dim();
    p.name_ = "eikonal(" + eik.hamiltonian().name() + ", t=" + std::to_string(t) + ")";
    p.eik_ = std::make_shared<const Eikonal>(std::move(eik));
    p.t_ = t;
    return p;
  }

  int dim() const { return d_; }
  const std::string& name() const { return name_; }
  bool is_standard() const { return !eik_; }
  const Eikonal* eikonal() const { return eik_.get(); }
  double time() const { return t_; }

  EikonalPoint operator()(const Vec& x, const Vec& eta) const {
    if (eik_) return eik_->evaluate(t_, x, eta);
    EikonalPoint p;
    p.U = x.dot(eta);
    p.grad_x = eta;
    p.grad_eta = x;
    p.hess_xx = Mat::Zero(d_, d_);
    p.hess_xeta = Mat::Identity(d_, d_);
    p.hess_etaeta = Mat::Zero(d_, d_);
    p.y = x;
    p.dx_dy = Mat::Identity(d_, d_);
    return p;
  }

  PhaseSamples sample(const Grid& g) const {
    require(g.dim() == d_, "phase: grid dimension mismatch");
    return eik_ ? eikonal_phase(g, *eik_, t_) : standard_phase(g);
  }

 private:
  int d_ = 1;
  std::string name_;
  std::shared_ptr<const Eikonal> eik_;
  double t_ = 0.0;
};

// M(x, xi) = int_0^1 (1 - s) B(x + s v) ds.
inline Mat magnetic_moment(const MagneticField& B, const Vec& x, const Vec& v, int nodes = 8) {
  const int d = static_cast<int>(x.size());
  Mat M = Mat::Zero(d, d);
  if (B.is_zero()) return M;
  const auto& q = gauss_legendre(nodes);
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    double s = q.nodes[k];
    M += q.weights[k] * (1.0 - s) * B.matrix(x + s * v);
  }
  return M;
}

// e_B(x, xi) = <M(x, xi) grad_zeta a(x, grad_x U), grad_xi d> b(x, xi).
inline Complex magnetic_correction(const MagneticField& B, const CVec& grad_zeta_a, const Vec& x,
                                   const Vec& grad_xi_d, Complex b) {
  if (B.is_zero() || grad_xi_d.norm() == 0.0) return 0.0;
  Mat M = magnetic_moment(B, x, grad_xi_d);
  CVec Mg = M.cast<Complex>() * grad_zeta_a;
  return Mg.cwiseProduct(grad_xi_d.cast<Complex>()).sum() * b;
}

// c0 + e_B for Op(a) o Op_U(b).
inline Symbol compose_psido_fio_principal(const Symbol& a, const Symbol& b, const PhaseFunction& U,
                                          const MagneticField& B) {
  check_same_dim(a, b);
  const int d = a.dim();
  auto f = [a, b, U, B, d](const Vec& x, const Vec& xi) -> Complex {
    EikonalPoint p = U(x, xi);
    const Vec zeta = p.grad_x;
    SymbolDerivatives da = a.derivatives(x, zeta, 2);
    SymbolDerivatives db = b.derivatives(x, xi, 1);
    Complex c0 = da.value * db.value;
    c0 -= kI * da.dxi.cwiseProduct(db.dx).sum();
    Complex tr = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) tr += da.dxixi(j, k) * p.hess_xx(k, j);
    c0 -= 0.5 * kI * tr * db.value;
    Vec grad_xi_d = p.grad_eta - x;
    return c0 + magnetic_correction(B, da.dxi, x, grad_xi_d, db.value);
  };
  return symbol_from_function(d, a.order() + b.order(), f, "psido_fio(" + a.name() + "," + b.name() + ")");
}

// a(x, xi) b(grad_xi U(x, xi), xi) for Op_U(a) o Op(b).
inline Symbol compose_fio_psido_principal(const Symbol& a, const Symbol& b, const PhaseFunction& U) {
  check_same_dim(a, b);
  auto f = [a, b, U](const Vec& x, const Vec& xi) -> Complex {
    EikonalPoint p = U(x, xi);
    return a(x, xi) * b(p.grad_eta, xi);
  };
  return symbol_from_function(a.dim(), a.order() + b.order(), f, "fio_psido(" + a.name() + "," + b.name() + ")");
}

struct InverseOptions {
  double tol = 1e-12;
  int max_iterations = 50;
};

// eta with grad_x U(x, eta) = xi, Newton from eta = xi.
inline Vec lambda_inverse(const PhaseFunction& U, const Vec& x, const Vec& xi, const InverseOptions& opt = {}) {
  if (U.is_standard()) return xi;
  Vec eta = xi;
  const double scale = 1.0 + xi.norm();
  for (int it = 0; it < opt.max_iterations; ++it) {
    EikonalPoint p = U(x, eta);
    Vec F = p.grad_x - xi;
    if (F.norm() <= opt.tol * scale) return eta;
    // d(grad_x U)_j / d eta_k = hess_xeta(j, k).
    eta -= p.hess_xeta.partialPivLu().solve(F);
    if (!eta.allFinite()) break;
  }
  throw ConvergenceError("lambda_inverse: Newton did not converge; the phase may violate the Hyp-U bound");
}

// y with grad_eta U(y, xi) = x, Newton from y = x.
inline Vec V_inverse(const PhaseFunction& U, const Vec& x, const Vec& xi, const InverseOptions& opt = {}) {
  if (U.is_standard()) return x;
  Vec y = x;
  const double scale = 1.0 + x.norm();
  for (int it = 0; it < opt.max_iterations; ++it) {
    EikonalPoint p = U(y, xi);
    Vec F = p.grad_eta - x;
    if (F.norm() <= opt.tol * scale) return y;
    // d(grad_eta U)_j / d y_k = hess_xeta(k, j).
    y -= p.hess_xeta.transpose().partialPivLu().solve(F);
    if (!y.allFinite()) break;
  }
  throw ConvergenceError("V_inverse: Newton did not converge; the phase may violate the Hyp-U bound");
}

namespace detail {
inline double mixed_det(const EikonalPoint& p) {
  double det = p.hess_xeta.determinant();
  if (!(std::abs(det) > 1e-14)) throw NumericalError("mixed Hessian of the phase is singular");
  return std::abs(det);
}
}  // namespace detail

// a(x, lam) conj(b(x, lam)) / |det d2U/dx deta (x, lam)| with lam = lambda_inverse.
inline Symbol fio_fiostar_principal(const Symbol& a, const Symbol& b, const PhaseFunction& U) {
  check_same_dim(a, b);
  auto f = [a, b, U](const Vec& x, const Vec& xi) -> Complex {
    Vec lam = lambda_inverse(U, x, xi);
    return a(x, lam) * std::conj(b(x, lam)) / detail::mixed_det(U(x, lam));
  };
  return symbol_from_function(a.dim(), a.order() + b.order(), f,
                              "fio_fiostar(" + a.name() + "," + b.name() + ")");
}

// conj(a(V, xi)) b(V, xi) / |det d2U/dx deta (V, xi)| with V = V_inverse.
inline Symbol fiostar_fio_principal(const Symbol& a, const Symbol& b, const PhaseFunction& U) {
  check_same_dim(a, b);
  auto f = [a, b, U](const Vec& x, const Vec& xi) -> Complex {
    Vec V = V_inverse(U, x, xi);
    return std::conj(a(V, xi)) * b(V, xi) / detail::mixed_det(U(V, xi));
  };
  return symbol_from_function(a.dim(), a.order() + b.order(), f,
                              "fiostar_fio(" + a.name() + "," + b.name() + ")");
}

// a o Phi_{-t}, Phi the Hamiltonian flow of h.
inline Symbol egorov_symbol(const Symbol& a, const Symbol& h, double t, int steps_per_unit = 500) {
  check_same_dim(a, h);
  if (t == 0.0) return a;
  FlowOptions opt;
  opt.steps = std::max(16, static_cast<int>(std::ceil(std::abs(t) * steps_per_unit)));
  opt.variational = false;
  opt.keep_path = false;
  auto f = [a, h, t, opt](const Vec& x, const Vec& xi) -> Complex {
    auto tr = hamiltonian_flow(h, join(x, xi), -t, opt);
    return a(tr.x(), tr.xi());
  };
  return symbol_from_function(a.dim(), a.order(), f, "egorov(" + a.name() + ")", a.is_real());
}

inline constexpr double kResidualFloor = 1e-13;

// Least-squares slope of log(values) against log(lambdas); -inf when any
// value is below the residual floor.
inline double order_scaling_exponent(const std::vector<double>& lambdas, const std::vector<double>& values) {
  require(lambdas.size() == values.size(), "order_scaling_exponent: size mismatch");
  require(lambdas.size() >= 4, "order_scaling_exponent: need at least 4 lambda values");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    require(lambdas[i] > 0.0, "order_scaling_exponent: lambdas must be positive");
    if (i > 0) {
      double r = lambdas[i] / lambdas[i - 1];
      require(std::abs(r - 2.0) < 1e-12, "order_scaling_exponent: lambdas must be dyadic");
    }
  }
  for (double v : values)
    if (!(v >= kResidualFloor)) return -std::numeric_limits<double>::infinity();
  const std::size_t n = lambdas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(lambdas[i]), ly = std::log(values[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Slope of max_x |residual(x, lambda xi0)| over the given x samples.
inline double order_scaling_exponent(const std::function<Complex(const Vec&, const Vec&)>& residual,
                                     const std::vector<Vec>& xs, const Vec& xi0,
                                     const std::vector<double>& lambdas) {
  std::vector<double> maxima;
  for (double lam : lambdas) {
    double m = 0.0;
    for (const auto& x : xs) m = std::max(m, std::abs(residual(x, lam * xi0)));
    maxima.push_back(m);
  }
  return order_scaling_exponent(lambdas, maxima);
}

// ---- grid composition checks --------------------------------------------

enum class Theorem { PsidoFio, FioPsido, FioFiostar, FiostarFio };

inline Theorem theorem_from_string(const std::string& s) {
  if (s == "psido-fio") return Theorem::PsidoFio;
  if (s == "fio-psido") return Theorem::FioPsido;
  if (s == "fio-fiostar") return Theorem::FioFiostar;
  if (s == "fiostar-fio") return Theorem::FiostarFio;
  throw ConfigError("unknown composition '" + s + "' (psido-fio, fio-psido, fio-fiostar, fiostar-fio)");
}

inline std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::PsidoFio: return "psido-fio";
    case Theorem::FioPsido: return "fio-psido";
    case Theorem::FioFiostar: return "fio-fiostar";
    case Theorem::FiostarFio: return "fiostar-fio";
  }
  return "unknown";
}

// Order of the principal-symbol remainder and the slope slack.
inline double claimed_residual_order(Theorem t, double m1, double m2) {
  return t == Theorem::PsidoFio ? m1 + m2 - 2.0 : m1 + m2 - 1.0;
}
inline double slope_slack(Theorem t) { return t == Theorem::PsidoFio ? 0.7 : 0.5; }

struct CompositionReport {
  Theorem theorem = Theorem::PsidoFio;
  std::vector<double> lambdas;
  std::vector<long> freq_index;   // grid column of lambda xi0
  DenseMatrix predicted;          // rows x_i, columns lambda
  DenseMatrix measured;
  DenseMatrix residual;
  std::vector<double> residual_max;
  double slope = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// Flat frequency index of xi on the dual grid.
inline long frequency_index(const Grid& g, const Vec& xi) {
  const double step = g.dual_step();
  int m[kMaxDim];
  for (int a = 0; a < g.dim(); ++a) {
    double r = xi(a) / step;
    long k = std::lround(r);
    if (std::abs(r - k) > 1e-9) throw ConfigError("frequency is not on the dual grid");
    if (k < -g.N() / 2 || k >= g.N() / 2) throw ConfigError("frequency outside the grid band");
    m[a] = static_cast<int>(k + g.N() / 2);
  }
  return g.flatten(m);
}

// Measured symbol of the grid composition for each theorem.
inline SymbolSamples measured_composition(Theorem th, const Quantizer& q, const Symbol& a, const Symbol& b,
                                          const PhaseSamples& U) {
  auto fio = [&](const Symbol& s) { return fio_operator(q, s, U); };
  switch (th) {
    case Theorem::PsidoFio: return extract_symbol(q, left_operator(q, a) * fio(b), &U);
    case Theorem::FioPsido: return extract_symbol(q, fio(a) * left_operator(q, b), &U);
    case Theorem::FioFiostar: return extract_symbol(q, fio(a) * fio(b).adjoint());
    case Theorem::FiostarFio: return extract_symbol(q, fio(a).adjoint() * fio(b));
  }
  throw ConfigError("unknown theorem");
}

inline Symbol predicted_composition(Theorem th, const Symbol& a, const Symbol& b, const PhaseFunction& U,
                                    const MagneticField& B) {
  switch (th) {
    case Theorem::PsidoFio: return compose_psido_fio_principal(a, b, U, B);
    case Theorem::FioPsido: return compose_fio_psido_principal(a, b, U);
    case Theorem::FioFiostar: return fio_fiostar_principal(a, b, U);
    case Theorem::FiostarFio: return fiostar_fio_principal(a, b, U);
  }
  throw ConfigError("unknown theorem");
}

// Compare a measured symbol with a prediction at eta = lambda xi0 over all grid x.
inline CompositionReport compare_on_rays(const Grid& g, const SymbolSamples& measured, const Symbol& predicted,
                                         const Vec& xi0, const std::vector<double>& lambdas) {
  CompositionReport r;
  r.lambdas = lambdas;
  const long n = g.size();
  const long m = static_cast<long>(lambdas.size());
  r.predicted.resize(n, m);
  r.measured.resize(n, m);
  auto xs = g.points();
  for (long c = 0; c < m; ++c) {
    Vec xi = lambdas[static_cast<std::size_t>(c)] * xi0;
    long k = frequency_index(g, xi);
    r.freq_index.push_back(k);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) r.predicted(i, c) = predicted(xs[static_cast<std::size_t>(i)], xi);
    r.measured.col(c) = measured.col(k);
  }
  r.residual = r.measured - r.predicted;
  for (long c = 0; c < m; ++c) r.residual_max.push_back(r.residual.col(c).cwiseAbs().maxCoeff());
  r.slope = order_scaling_exponent(r.lambdas, r.residual_max);
  return r;
}

inline CompositionReport composition_check(Theorem th, const Quantizer& q, const Symbol& a, const Symbol& b,
                                           const PhaseFunction& U, const PhaseSamples& Us, const MagneticField& B,
                                           const Vec& xi0, const std::vector<double>& lambdas) {
  SymbolSamples meas = measured_composition(th, q, a, b, Us);
  CompositionReport r = compare_on_rays(q.grid(), meas, predicted_composition(th, a, b, U, B), xi0, lambdas);
  r.theorem = th;
  r.bound = claimed_residual_order(th, a.order(), b.order()) + slope_slack(th);
  r.pass = r.slope <= r.bound;
  return r;
}

}  // namespace magfio
