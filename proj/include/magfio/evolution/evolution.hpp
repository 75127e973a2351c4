#pragma once

#include "magfio/calculus/calculus.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <optional>

namespace magfio {

// P = Op^A(a) with left symbol b, truncated principal part abar0 = chi_rho a0
// and remainder b0 = b - abar0.
struct TransportSetup {
  Symbol a;
  Symbol b;
  Symbol abar0;
  Symbol b0;
  MagneticField B;
  VectorPotential A;
  std::shared_ptr<const Eikonal> eikonal;
  double rho = 1.0;
  double T = std::numeric_limits<double>::infinity();
  double b0_order = 0.0;  // sampled order of b0

  int dim() const { return a.dim(); }
  bool free_flow() const { return abar0.x_independent(); }
  void check_time(double t) const {
    if (std::abs(t) >= T)
      throw ConfigError("transport: |t| = " + std::to_string(std::abs(t)) + " is outside the window T = " +
                        std::to_string(T));
  }
};

// Sampled order of a symbol: slope of sup |s(x, lambda xi)| over dyadic lambda.
inline double sampled_order(const Symbol& s, const std::vector<PhasePoint>& samples,
                            const std::vector<double>& lambdas = {4, 8, 16, 32, 64}) {
  std::vector<double> sup;
  for (double lam : lambdas) {
    double m = 0.0;
    for (const auto& p : samples) {
      if (p.xi.norm() == 0.0) continue;
      m = std::max(m, std::abs(s(p.x, lam * p.xi / p.xi.norm())));
    }
    sup.push_back(m);
  }
  return order_scaling_exponent(lambdas, sup);
}

struct SetupOptions {
  double rho = 1.0;
  double T = std::numeric_limits<double>::infinity();
  int left_terms = 2;
  EikonalOptions eikonal{};
};

inline TransportSetup make_transport_setup(const Symbol& a, const MagneticField& B, const VectorPotential& A,
                                           const SetupOptions& opt = {}) {
  require(a.dim() == B.dim() && a.dim() == A.dim(), "transport setup: dimension mismatch");
  if (!a.is_real()) throw ConfigError("transport setup: Hamiltonian '" + a.name() + "' must be real");
  TransportSetup s;
  s.a = a;
  s.b = weyl_to_left(a, opt.left_terms);
  s.abar0 = principal_truncation(a.principal(), opt.rho);
  s.b0 = s.b - s.abar0;
  s.B = B;
  s.A = A;
  s.rho = opt.rho;
  s.T = opt.T;
  s.eikonal = std::make_shared<const Eikonal>(s.abar0, opt.eikonal, opt.T);
  s.b0_order = sampled_order(s.b0, phase_samples(a.dim(), 24, 2.0, 1.0, 11));
  if (s.b0_order > 0.25)
    throw ConfigError("transport setup: remainder b - abar0 has sampled order " + std::to_string(s.b0_order) +
                      " > 0; the principal part of '" + a.name() + "' does not match");
  return s;
}

// Samples of the characteristic through (y, xi) for the truncated principal
// part at uniform times s_j = j t / steps.
struct Characteristic {
  Vec y, xi;
  double t = 0.0;
  std::vector<Vec> x, eta;
  std::vector<Mat> dx_dy, dxi_dy;
  int steps() const { return static_cast<int>(x.size()) - 1; }
  double time(int j) const { return t * j / steps(); }
};

inline Characteristic characteristic(const TransportSetup& s, double t, const Vec& y, const Vec& xi, int steps) {
  require(steps >= 2 && steps % 2 == 0, "characteristic: steps must be even and >= 2");
  const int d = s.dim();
  Characteristic c;
  c.y = y;
  c.xi = xi;
  c.t = t;
  if (s.free_flow()) {
    Vec v = hamiltonian_jet(s.abar0, join(y, xi), 1).grad.tail(d);
    for (int j = 0; j <= steps; ++j) {
      c.x.push_back(y + (t * j / steps) * v);
      c.eta.push_back(xi);
      c.dx_dy.push_back(Mat::Identity(d, d));
      c.dxi_dy.push_back(Mat::Zero(d, d));
    }
    return c;
  }
  FlowOptions fo;
  fo.steps = steps;
  auto tr = hamiltonian_flow(s.abar0, join(y, xi), t, fo);
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    c.x.push_back(head(tr.states[j]));
    c.eta.push_back(tail(tr.states[j]));
    c.dx_dy.push_back(tr.jacobians[j].topLeftCorner(d, d));
    c.dxi_dy.push_back(tr.jacobians[j].bottomLeftCorner(d, d));
  }
  return c;
}

// K(s_j) = i b0(x, eta) + 1/2 Tr[d2_xi b(x, eta) d2_xx U_s] + i <M_s grad_xi b(x, eta), y - x>.
inline Complex transport_K(const TransportSetup& s, const Characteristic& c, int j) {
  const int d = s.dim();
  const Vec& x = c.x[static_cast<std::size_t>(j)];
  const Vec& eta = c.eta[static_cast<std::size_t>(j)];
  Complex K = kI * s.b0(x, eta);
  const Mat& A = c.dx_dy[static_cast<std::size_t>(j)];
  const Mat& C = c.dxi_dy[static_cast<std::size_t>(j)];
  const bool curved = C.norm() != 0.0;
  const Vec dd = c.y - x;  // grad_xi d_s(x(s), xi)
  const bool magnetic = !s.B.is_zero() && dd.norm() != 0.0;
  if (!curved && !magnetic) return K;
  SymbolDerivatives db = s.b.derivatives(x, eta, curved ? 2 : 1);
  if (curved) {
    Mat hxx = C * A.inverse();
    Complex tr = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) tr += db.dxixi(p, q) * hxx(q, p);
    K += 0.5 * tr;
  }
  if (magnetic) {
    Mat M = magnetic_moment(s.B, x, dd);
    CVec Mg = M.cast<Complex>() * db.dxi;
    K += kI * Mg.cwiseProduct(dd.cast<Complex>()).sum();
  }
  return K;
}

inline int transport_steps(const TransportSetup& s, double t, int multiple = 2) {
  int n = s.eikonal->steps_for(t);
  n = ((n + multiple - 1) / multiple) * multiple;
  return n + (n % 2);
}

// Coefficient K(t; Y) at the end of the characteristic through Y.
inline Complex transport_coefficient(const TransportSetup& s, double t, const Vec& y, const Vec& xi) {
  s.check_time(t);
  if (t == 0.0) return kI * s.b0(y, xi);
  auto c = characteristic(s, t, y, xi, transport_steps(s, t));
  return transport_K(s, c, c.steps());
}

// Source g(s; Y) sampled at `intervals` + 1 uniform times along the
// characteristic (intervals = 0 samples at every flow node).
struct TransportSource {
  std::function<Complex(double s, const Vec& x, const Vec& xi)> g;
  int intervals = 0;
};

// z(t) = -i int_0^t exp(-int_s^t K) g(s) ds + init exp(-int_0^t K).
inline Complex transport_solve(const TransportSetup& s, const Characteristic& c, const TransportSource* src,
                               Complex init) {
  const int n = c.steps();
  const double h = c.t / n;
  std::vector<Complex> K(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j) K[static_cast<std::size_t>(j)] = transport_K(s, c, j);
  auto I = cumulative_integral<Complex>(K, h);
  const Complex It = I.back();
  Complex z = init * std::exp(-It);
  if (src && src->g) {
    const int m = src->intervals > 0 ? src->intervals : n;
    require(n % m == 0 && m % 2 == 0, "transport_solve: source intervals must be even and divide the flow steps");
    const int r = n / m;
    std::vector<Complex> f(static_cast<std::size_t>(m + 1));
    for (int j = 0; j <= m; ++j) {
      const int node = j * r;
      f[static_cast<std::size_t>(j)] = std::exp(-(It - I[static_cast<std::size_t>(node)])) *
                                       src->g(c.time(node), c.x[static_cast<std::size_t>(node)], c.xi);
    }
    z += -kI * simpson<Complex>(f, c.t / m);
  }
  return z;
}

inline Complex transport_solve(const TransportSetup& s, double t, const Vec& y, const Vec& xi,
                               const TransportSource* src, Complex init) {
  s.check_time(t);
  if (t == 0.0) return init;
  const int mult = src && src->intervals > 0 ? src->intervals : 2;
  auto c = characteristic(s, t, y, xi, transport_steps(s, t, mult));
  return transport_solve(s, c, src, init);
}

namespace detail {

// True when K along every characteristic with frequency xi is the constant
// i b0(xi): free flow, x-independent b0 and no magnetic contribution.
inline bool column_constant(const TransportSetup& s, const Vec& xi) {
  if (!s.free_flow() || !s.b0.x_independent() || !s.b.x_independent()) return false;
  if (s.B.is_zero()) return true;
  const int d = s.dim();
  Vec zero = Vec::Zero(d);
  Vec v = hamiltonian_jet(s.abar0, join(zero, xi), 1).grad.tail(d);
  CVec g = s.b.derivatives(zero, xi, 1).dxi;
  // <M g, v> vanishes for antisymmetric M when g and v are parallel.
  double wedge = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) wedge = std::max(wedge, std::abs(g(k) * v(j) - g(j) * v(k)));
  return wedge <= 1e-14 * (1.0 + g.norm() * v.norm());
}

}  // namespace detail

// Starting point y = f(t; x, xi) of the characteristic that lands on x.
inline Vec characteristic_start(const TransportSetup& s, double t, const Vec& x, const Vec& xi,
                                const Vec* guess = nullptr) {
  if (t == 0.0) return x;
  if (s.free_flow()) return x - t * hamiltonian_jet(s.abar0, join(x, xi), 1).grad.tail(s.dim());
  return s.eikonal->evaluate(t, x, xi, guess).y;
}

// Grid evaluation of z(t; f(t; x_i, eta_k), eta_k).
template <class Source>
SymbolSamples transport_on_grid(const TransportSetup& s, double t, const Grid& g, Source&& make_source,
                                Complex init, int intervals) {
  s.check_time(t);
  const long n = g.size();
  auto xs = g.points();
  auto es = g.freqs();
  SymbolSamples out(n, n);
  if (t == 0.0) {
    out.setConstant(init);
    return out;
  }
  const int steps = transport_steps(s, t, intervals > 0 ? intervals : 2);
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < n; ++k) {
    const Vec& xi = es[static_cast<std::size_t>(k)];
    std::optional<TransportSource> src = make_source(k);
    if (detail::column_constant(s, xi)) {
      // K = i b0(xi) along straight characteristics x(s) = y + s v.
      const Complex kappa = kI * s.b0(xs[0], xi);
      const Complex hom = init * std::exp(-kappa * t);
      if (!src) {
        out.col(k).setConstant(hom);
        continue;
      }
      const int m = src->intervals;
      require(m >= 2 && m % 2 == 0, "transport: source intervals must be even and >= 2");
      const Vec v = hamiltonian_jet(s.abar0, join(xs[0], xi), 1).grad.tail(g.dim());
      std::vector<Complex> f(static_cast<std::size_t>(m + 1));
      for (long i = 0; i < n; ++i) {
        const Vec y = xs[static_cast<std::size_t>(i)] - t * v;
        for (int j = 0; j <= m; ++j) {
          const double sj = t * j / m;
          f[static_cast<std::size_t>(j)] = std::exp(-kappa * (t - sj)) * src->g(sj, y + sj * v, xi);
        }
        out(i, k) = hom - kI * simpson<Complex>(f, t / m);
      }
      continue;
    }
    Vec y_prev;
    for (long i = 0; i < n; ++i) {
      const Vec& x = xs[static_cast<std::size_t>(i)];
      Vec y = characteristic_start(s, t, x, xi, i > 0 && !s.free_flow() ? &y_prev : nullptr);
      y_prev = y;
      auto c = characteristic(s, t, y, xi, steps);
      out(i, k) = transport_solve(s, c, src ? &*src : nullptr, init);
    }
  }
  return out;
}

// b_{t,0} on the grid.
inline SymbolSamples leading_symbol(const TransportSetup& s, double t, const Grid& g) {
  return transport_on_grid(s, t, g, [](long) { return std::optional<TransportSource>{}; }, 1.0, 0);
}

// Periodic multilinear interpolation of column k of grid samples at x.
inline Complex interpolate_column(const Grid& g, const SymbolSamples& f, long k, const Vec& x) {
  const int d = g.dim();
  const int N = g.N();
  int i0[2];
  double w[2];
  for (int a = 0; a < d; ++a) {
    double u = (x(a) + g.L()) / g.h();
    double fl = std::floor(u);
    w[a] = u - fl;
    i0[a] = static_cast<int>(((static_cast<long>(fl) % N) + N) % N);
  }
  Complex r = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    int idx[2];
    double wt = 1.0;
    for (int a = 0; a < d; ++a) {
      int bit = (corner >> a) & 1;
      idx[a] = (i0[a] + bit) % N;
      wt *= bit ? w[a] : 1.0 - w[a];
    }
    r += wt * f(g.flatten(idx), k);
  }
  return r;
}

// Samples of f_{s,1} at uniform times s_j = j t / (count - 1).
struct SourceSamples {
  double t = 0.0;
  std::vector<SymbolSamples> f;
  int intervals() const { return static_cast<int>(f.size()) - 1; }
};

// Measured c_{t,0} - abar0 b_{t,0} - L^B b_{t,0} on the grid, with c_{t,0}
// extracted from the dense composition Op(b) Op_{Phi_t}(b_{t,0}).
class CorrectionSource {
 public:
  CorrectionSource(const TransportSetup& s, const Quantizer& q) : s_(s), q_(q) {
    q_.grid().require_dense();
    left_ = left_operator(q_, s_.b);
  }

  SymbolSamples operator()(double t, const SymbolSamples& bt0) const {
    const Grid& g = q_.grid();
    const int d = g.dim();
    const long n = g.size();
    PhaseFunction U = t == 0.0 ? PhaseFunction::standard(d) : PhaseFunction::from_eikonal(*s_.eikonal, t);
    PhaseSamples Us = U.sample(g);
    GridOperator F = fio_operator(q_, bt0, Us);
    SymbolSamples c = extract_symbol(q_, left_ * F, &Us);
    // Spectral x-gradients of b_{t,0}, column by column.
    std::vector<SymbolSamples> grad(static_cast<std::size_t>(d), SymbolSamples(n, n));
    const Transform& tr = q_.transform();
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) {
      DenseVector col = bt0.col(k);
      for (int a = 0; a < d; ++a) grad[static_cast<std::size_t>(a)].col(k) = tr.derivative(col, a);
    }
    auto xs = g.points();
    auto es = g.freqs();
    SymbolSamples f(n, n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long k = 0; k < n; ++k) {
      const Vec& xi = es[static_cast<std::size_t>(k)];
      for (long i = 0; i < n; ++i) {
        const Vec& x = xs[static_cast<std::size_t>(i)];
        EikonalPoint p = U(x, xi);
        const Vec& zeta = p.grad_x;
        const Complex gv = bt0(i, k);
        SymbolDerivatives da = s_.abar0.derivatives(x, zeta, 1);
        SymbolDerivatives db = s_.b.derivatives(x, zeta, 2);
        Complex L = s_.b0(x, zeta) * gv;
        for (int a = 0; a < d; ++a) L -= kI * da.dxi(a) * grad[static_cast<std::size_t>(a)](i, k);
        Complex trc = 0.0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) trc += db.dxixi(a, b) * p.hess_xx(b, a);
        L -= 0.5 * kI * trc * gv;
        L += magnetic_correction(s_.B, db.dxi, x, p.grad_eta - x, gv);
        f(i, k) = c(i, k) - da.value * gv - L;
      }
    }
    return f;
  }

 private:
  const TransportSetup& s_;
  const Quantizer& q_;
  GridOperator left_;
};

inline SymbolSamples correction_source(const TransportSetup& s, double t, const SymbolSamples& bt0,
                                       const Quantizer& q) {
  return CorrectionSource(s, q)(t, bt0);
}

// Smooth spatial window: 1 for max_a |x_a| <= inner L, 0 beyond outer L.
// Near the periodic boundary the measured source mixes wrapped segments
// whose magnetic phases are inconsistent, so it is only trusted inside.
struct SourceWindow {
  double inner = 0.5;
  double outer = 0.75;

  double operator()(const Grid& g, const Vec& x) const {
    double w = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
      double u = 1.0 + (std::abs(x(a)) / g.L() - inner) / (outer - inner);
      w *= 1.0 - formulas::smooth_step(u);
    }
    return w;
  }
};

inline SourceSamples correction_sources(const TransportSetup& s, double t, const Quantizer& q, int intervals,
                                        const std::optional<SourceWindow>& window = SourceWindow{}) {
  require(intervals >= 2 && intervals % 2 == 0, "correction sources: intervals must be even and >= 2");
  const Grid& g = q.grid();
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(g.size());
  if (window) {
    require(0.0 < window->inner && window->inner < window->outer && window->outer <= 1.0,
            "correction sources: window needs 0 < inner < outer <= 1");
    for (long i = 0; i < g.size(); ++i) mask(i) = (*window)(g, g.point(i));
  }
  CorrectionSource cs(s, q);
  SourceSamples out;
  out.t = t;
  for (int j = 0; j <= intervals; ++j) {
    double sj = t * j / intervals;
    SymbolSamples f = cs(sj, leading_symbol(s, sj, g));
    f.array().colwise() *= mask.array().cast<Complex>();
    out.f.push_back(std::move(f));
  }
  return out;
}

// b_{t,1} from the sampled sources.
inline SymbolSamples correction_symbol(const TransportSetup& s, const SourceSamples& src, const Grid& g) {
  const int m = src.intervals();
  const double t = src.t;
  auto make = [&](long k) {
    TransportSource ts;
    ts.intervals = m;
    ts.g = [&, k](double sj, const Vec& x, const Vec&) {
      int j = static_cast<int>(std::lround(sj / t * m));
      return interpolate_column(g, src.f[static_cast<std::size_t>(j)], k, x);
    };
    return std::optional<TransportSource>(ts);
  };
  return transport_on_grid(s, t, g, make, 0.0, m);
}

struct PropagatorBundle {
  double t = 0.0;
  int k_max = 0;
  PhaseSamples U;
  SymbolSamples b0;
  std::optional<SymbolSamples> b1;
  std::optional<GridOperator> op;

  SymbolSamples amplitude() const { return b1 ? SymbolSamples(b0 + *b1) : b0; }
};

struct PropagatorOptions {
  int k_max = 0;
  int source_intervals = 4;
  bool assemble = true;
  std::optional<SourceWindow> source_window = SourceWindow{};
};

inline PropagatorBundle fio_propagator(const TransportSetup& s, double t, const Quantizer& q,
                                       const PropagatorOptions& opt = {}) {
  require(opt.k_max == 0 || opt.k_max == 1, "fio_propagator: K_max must be 0 or 1");
  s.check_time(t);
  const Grid& g = q.grid();
  PropagatorBundle pb;
  pb.t = t;
  pb.k_max = opt.k_max;
  pb.U = t == 0.0 ? standard_phase(g) : eikonal_phase(g, *s.eikonal, t);
  pb.b0 = leading_symbol(s, t, g);
  if (opt.k_max == 1) {
    if (t == 0.0)
      pb.b1 = SymbolSamples::Zero(g.size(), g.size());
    else
      pb.b1 = correction_symbol(s, correction_sources(s, t, q, opt.source_intervals, opt.source_window), g);
  }
  if (opt.assemble) {
    SymbolSamples amp = pb.amplitude();
    pb.op = fio_operator(q, amp, pb.U);
    pb.op->meta["t"] = std::to_string(t);
    pb.op->meta["k_max"] = std::to_string(opt.k_max);
  }
  return pb;
}

inline WaveFunction apply_propagator(const PropagatorBundle& pb, const Quantizer& q, const WaveFunction& u) {
  if (pb.op) return pb.op->apply(u);
  SymbolSamples amp = pb.amplitude();
  return fio_apply(q, amp, pb.U, u).u;
}

// e^{-itH} with H the symmetrized Weyl kernel, by dense eigendecomposition.
class ReferencePropagator {
 public:
  ReferencePropagator(const Quantizer& q, const Symbol& a) : grid_(q.grid()) {
    GridOperator K = weyl_operator(q, a);
    const double scale = std::max(K.matrix.norm(), 1e-300);
    hermiticity_defect_ = (K.matrix - K.matrix.adjoint()).norm() / scale;
    DenseMatrix H = 0.5 * (K.matrix + K.matrix.adjoint());
    const lapack_int n = static_cast<lapack_int>(H.rows());
    Eigen::VectorXd w(n);
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n, H.data(), n, w.data());
    if (info != 0) throw ConvergenceError("reference propagator: eigensolver failed (info " + std::to_string(info) + ")");
    V_ = std::move(H);
    lambda_ = std::move(w);
  }

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const DenseMatrix& eigenvectors() const { return V_; }
  double hermiticity_defect() const { return hermiticity_defect_; }

  WaveFunction apply(double t, const WaveFunction& u) const {
    require(u.grid == grid_, "reference propagator: grid mismatch");
    DenseVector c = V_.adjoint() * u.values;
    for (long j = 0; j < c.size(); ++j) c(j) *= std::polar(1.0, -t * lambda_(j));
    return WaveFunction(grid_, V_ * c);
  }

  GridOperator at(double t) const {
    DenseMatrix W = V_;
    for (long j = 0; j < W.cols(); ++j) W.col(j) *= std::polar(1.0, -t * lambda_(j));
    GridOperator r;
    r.grid = grid_;
    r.matrix.noalias() = W * V_.adjoint();
    r.kind = KernelKind::Composite;
    r.meta["t"] = std::to_string(t);
    r.meta["reference"] = "spectral";
    return r;
  }

 private:
  Grid grid_;
  DenseMatrix V_;
  Eigen::VectorXd lambda_;
  double hermiticity_defect_ = 0.0;
};

inline WaveFunction fourier_multiplier(const Grid& g, const std::function<Complex(const Vec&)>& m,
                                       const WaveFunction& u) {
  Transform tr(g);
  DenseVector uh = tr.forward(u.values);
  for (long k = 0; k < g.size(); ++k) uh(k) *= m(g.freq(k));
  return WaveFunction(g, tr.inverse(uh));
}

// ---- wave packet centers ------------------------------------------------

struct PacketCenter {
  double t = 0.0;
  Vec position, frequency;
  Vec predicted_position, predicted_frequency;
  double position_deviation = 0.0;
  double frequency_deviation = 0.0;  // in units of the dual grid step
  double boundary_mass = 0.0;        // fraction of |u|^2 with max |x_a| > 0.9 L
  bool wrapped = false;
};

inline Vec position_centroid(const WaveFunction& u) {
  const Grid& g = u.grid;
  Vec c = Vec::Zero(g.dim());
  double m = 0.0;
  for (long i = 0; i < g.size(); ++i) {
    double w = std::norm(u.values(i));
    c += w * g.point(i);
    m += w;
  }
  return c / m;
}

inline Vec frequency_centroid(const WaveFunction& u) {
  const Grid& g = u.grid;
  Transform tr(g);
  DenseVector uh = tr.forward(u.values);
  Vec c = Vec::Zero(g.dim());
  double m = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    double w = std::norm(uh(k));
    c += w * g.freq(k);
    m += w;
  }
  return c / m;
}

inline double boundary_mass(const WaveFunction& u, double fraction = 0.9) {
  const Grid& g = u.grid;
  double edge = 0.0, total = 0.0;
  for (long i = 0; i < g.size(); ++i) {
    double w = std::norm(u.values(i));
    total += w;
    if (g.point(i).cwiseAbs().maxCoeff() > fraction * g.L()) edge += w;
  }
  return total == 0.0 ? 0.0 : edge / total;
}

inline std::vector<PacketCenter> wavepacket_track(const TransportSetup& s, const ReferencePropagator& ref,
                                                  const Vec& x0, const Vec& xi0, double sigma,
                                                  const std::vector<double>& times) {
  const Grid& g = ref.grid();
  WaveFunction u0 = wave_packet(g, x0, xi0, sigma);
  std::vector<PacketCenter> out;
  for (double t : times) {
    s.check_time(t);
    WaveFunction u = ref.apply(t, u0);
    PacketCenter c;
    c.t = t;
    c.position = position_centroid(u);
    c.frequency = frequency_centroid(u);
    if (t == 0.0) {
      c.predicted_position = x0;
      c.predicted_frequency = xi0;
    } else {
      FlowOptions fo;
      fo.steps = s.eikonal->steps_for(t);
      fo.variational = false;
      fo.keep_path = false;
      auto tr = hamiltonian_flow(s.abar0, join(x0, xi0), t, fo);
      c.predicted_position = tr.x();
      c.predicted_frequency = tr.xi();
    }
    c.position_deviation = (c.position - c.predicted_position).norm();
    c.frequency_deviation = (c.frequency - c.predicted_frequency).norm() / g.dual_step();
    c.boundary_mass = boundary_mass(u);
    c.wrapped = c.boundary_mass > 1e-3;
    out.push_back(std::move(c));
  }
  return out;
}

// ---- kernel decay -------------------------------------------------------

struct KernelDecayFit {
  bool delta_case = false;
  double slope = 0.0;
  double floor = 0.0;       // median |K| over the far region
  int points = 0;           // samples used by the fit
  std::vector<double> distance, magnitude;
};

// Distance from x to the light set {x0(t; y0, eta) : |eta| = 1}, minimized
// over sampled directions.
inline std::vector<Vec> light_set(const TransportSetup& s, double t, const Vec& y0, int directions = 64) {
  const int d = s.dim();
  std::vector<Vec> pts;
  const double R = 4.0 * s.rho;  // inside the homogeneous region of abar0
  FlowOptions fo;
  fo.steps = std::max(16, s.eikonal->steps_for(t));
  fo.variational = false;
  fo.keep_path = false;
  auto add = [&](const Vec& dir) {
    if (t == 0.0) {
      pts.push_back(y0);
      return;
    }
    pts.push_back(hamiltonian_flow(s.abar0, join(y0, R * dir), t, fo).x());
  };
  if (d == 1) {
    add(make_vec({1.0}));
    add(make_vec({-1.0}));
  } else {
    for (int j = 0; j < directions; ++j) {
      double th = 2.0 * kPi * j / directions;
      add(make_vec({std::cos(th), std::sin(th)}));
    }
  }
  return pts;
}

struct KernelDecayOptions {
  double mollifier_width = 0.25;
  double min_distance = 2.0;
  double far_fraction = 0.75;   // far region: distance >= far_fraction * (L - |y0|)
  double floor_margin = 100.0;  // fit uses |K| >= floor_margin * floor
  int directions = 64;
};

// Column K_t(., y0) probed with a unit-mass Gaussian of fixed width at y0.
inline KernelDecayFit kernel_decay_probe(const TransportSetup& s, const ReferencePropagator& ref, double t,
                                         const Vec& y0, const KernelDecayOptions& opt = {}) {
  const Grid& g = ref.grid();
  KernelDecayFit fit;
  DenseVector probe(g.size());
  const double eps = opt.mollifier_width;
  for (long i = 0; i < g.size(); ++i)
    probe(i) = std::exp(-(g.point(i) - y0).squaredNorm() / (2.0 * eps * eps));
  probe /= g.cell_volume() * probe.sum().real();
  WaveFunction col = ref.apply(t, WaveFunction(g, probe));
  if (col.values.cwiseAbs().maxCoeff() == 0.0) throw NumericalError("kernel_decay_probe: column is identically zero");
  if (t == 0.0) {
    fit.delta_case = true;
    return fit;
  }
  auto light = light_set(s, t, y0, opt.directions);
  const double far = opt.far_fraction * (g.L() - y0.cwiseAbs().maxCoeff());
  std::vector<double> far_vals;
  for (long i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& p : light) dist = std::min(dist, (x - p).norm());
    fit.distance.push_back(dist);
    fit.magnitude.push_back(std::abs(col.values(i)));
    if (dist >= far) far_vals.push_back(fit.magnitude.back());
  }
  if (far_vals.empty()) throw ConfigError("kernel_decay_probe: grid has no far region");
  std::nth_element(far_vals.begin(), far_vals.begin() + static_cast<long>(far_vals.size() / 2), far_vals.end());
  fit.floor = far_vals[far_vals.size() / 2];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < fit.distance.size(); ++i) {
    if (fit.distance[i] < opt.min_distance || fit.magnitude[i] < opt.floor_margin * fit.floor) continue;
    if (fit.magnitude[i] <= 0.0) continue;
    double lx = std::log(fit.distance[i]), ly = std::log(fit.magnitude[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  fit.points = n;
  if (n < 3) throw NumericalError("kernel_decay_probe: fewer than 3 samples above the floor");
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

}  // namespace magfio
