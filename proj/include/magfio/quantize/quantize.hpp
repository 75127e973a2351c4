#pragma once

#include "magfio/eikonal/eikonal.hpp"
#include "magfio/magnetic/phases.hpp"
#include "magfio/quantize/grid.hpp"

#include <map>
#include <mutex>

namespace magfio {

// Samples a(x_i, eta_k): rows are positions, columns frequencies.
using SymbolSamples = DenseMatrix;
// Phase U(x_i, eta_k) on the grid.
using PhaseSamples = Eigen::MatrixXd;

enum class KernelKind { Weyl, Left, Fio, FioAdjoint, Composite };

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Weyl: return "weyl";
    case KernelKind::Left: return "left";
    case KernelKind::Fio: return "fio";
    case KernelKind::FioAdjoint: return "fio_adjoint";
    case KernelKind::Composite: return "composite";
  }
  return "unknown";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "weyl") return KernelKind::Weyl;
  if (s == "left") return KernelKind::Left;
  if (s == "fio") return KernelKind::Fio;
  if (s == "fio_adjoint") return KernelKind::FioAdjoint;
  if (s == "composite") return KernelKind::Composite;
  throw ConfigError("unknown kernel kind '" + s + "'");
}

// Dense operator on grid samples with the quadrature weight folded in, so
// that matrix * samples = apply.
struct GridOperator {
  Grid grid;
  DenseMatrix matrix;
  KernelKind kind = KernelKind::Composite;
  std::map<std::string, std::string> meta;

  WaveFunction apply(const WaveFunction& u) const { return WaveFunction(grid, matrix * u.values); }
  GridOperator adjoint() const {
    GridOperator r{grid, matrix.adjoint(), kind == KernelKind::Fio ? KernelKind::FioAdjoint : KernelKind::Composite,
                   meta};
    return r;
  }
  friend GridOperator operator*(const GridOperator& a, const GridOperator& b) {
    require(a.grid == b.grid, "operator product: grid mismatch");
    GridOperator r;
    r.grid = a.grid;
    r.matrix.noalias() = a.matrix * b.matrix;
    r.kind = KernelKind::Composite;
    return r;
  }
};

struct ApplyResult {
  WaveFunction u;
  std::vector<std::string> warnings;
};

inline SymbolSamples sample_symbol(const Grid& g, const Symbol& a) {
  require(a.dim() == g.dim(), "sample_symbol: dimension mismatch");
  const long n = g.size();
  SymbolSamples s(n, n);
  auto xs = g.points();
  auto es = g.freqs();
  if (a.x_independent()) {
    DenseVector row(n);
    for (long k = 0; k < n; ++k) row(k) = a(xs[0], es[static_cast<std::size_t>(k)]);
    for (long i = 0; i < n; ++i) s.row(i) = row.transpose();
    return s;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i)
    for (long k = 0; k < n; ++k) s(i, k) = a(xs[static_cast<std::size_t>(i)], es[static_cast<std::size_t>(k)]);
  return s;
}

inline PhaseSamples standard_phase(const Grid& g) {
  const long n = g.size();
  PhaseSamples U(n, n);
  auto xs = g.points();
  auto es = g.freqs();
  for (long i = 0; i < n; ++i)
    for (long k = 0; k < n; ++k) U(i, k) = xs[static_cast<std::size_t>(i)].dot(es[static_cast<std::size_t>(k)]);
  return U;
}

// U(t; x_i, eta_k) from the eikonal.
inline PhaseSamples eikonal_phase(const Grid& g, const Eikonal& eik, double t) {
  require(eik.dim() == g.dim(), "eikonal_phase: dimension mismatch");
  const long n = g.size();
  PhaseSamples U(n, n);
  eik.for_each_point(t, g.points(), g.freqs(),
                     [&](std::size_t i, std::size_t k, const EikonalPoint& p) {
                       U(static_cast<long>(i), static_cast<long>(k)) = p.U;
                     });
  return U;
}

// Grid, potential and the (lazily built) table of omega^A(x_i, y_j).
class Quantizer {
 public:
  Quantizer(Grid g, VectorPotential A) : g_(std::move(g)), A_(std::move(A)), tr_(g_) {
    require(A_.dim() == g_.dim(), "quantizer: potential dimension does not match grid");
    xs_ = g_.points();
    omega_ = std::make_shared<OmegaTable>();
  }

  const Grid& grid() const { return g_; }
  const VectorPotential& potential() const { return A_; }
  const Transform& transform() const { return tr_; }
  const std::vector<Vec>& points() const { return xs_; }
  bool magnetic() const { return !A_.is_zero(); }

  Complex omega(long i, long j) const {
    if (!magnetic()) return 1.0;
    if (const DenseMatrix* t = omega_table()) return (*t)(i, j);
    return omega_phase(A_, xs_[static_cast<std::size_t>(i)], xs_[static_cast<std::size_t>(j)]);
  }

  // Dense table for grids within the dense cap; nullptr otherwise.
  const DenseMatrix* omega_table() const {
    if (!magnetic() || g_.size() > kDenseCap) return nullptr;
    std::call_once(omega_->once, [this] {
      const long n = g_.size();
      DenseMatrix W(n, n);
#pragma omp parallel for schedule(dynamic, 16)
      for (long i = 0; i < n; ++i) {
        W(i, i) = 1.0;
        for (long j = i + 1; j < n; ++j) {
          Complex w = omega_phase(A_, xs_[static_cast<std::size_t>(i)], xs_[static_cast<std::size_t>(j)]);
          W(i, j) = w;
          W(j, i) = std::conj(w);
        }
      }
      omega_->table = std::move(W);
    });
    return &omega_->table;
  }

  // ---- Weyl quantization -------------------------------------------------

  // Visits every pair (i, j) with the value (2L)^-d sum_k e^{i<x_i-y_j,eta_k>} a((x_i+y_j)/2, eta_k).
  template <class Visit>
  void weyl_pairs(const Symbol& a, Visit&& visit) const {
    require(a.dim() == g_.dim(), "weyl: dimension mismatch");
    const int d = g_.dim();
    const int N = g_.N();
    const long n = g_.size();
    const double h = g_.h();
    const double norm = std::pow(2.0 * g_.L(), -d);
    auto es = g_.freqs();
    const int S = 2 * N - 1;
    const long midpoints = d == 1 ? S : static_cast<long>(S) * S;
    FFT fft(d, N);
    std::vector<long> fidx(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) fidx[static_cast<std::size_t>(k)] = g_.fft_index(k);
    DenseVector xi_row;
    if (a.x_independent()) {
      xi_row.resize(n);
      for (long k = 0; k < n; ++k) xi_row(k) = a(xs_[0], es[static_cast<std::size_t>(k)]);
    }
    // Midpoints are transformed in parallel chunks and visited serially in a
    // fixed order, so accumulations do not depend on the thread count.
    constexpr long kChunk = 64;
    DenseMatrix buf(n, kChunk);
    auto midpoint = [&](long sidx, int* s) {
      s[0] = static_cast<int>(d == 1 ? sidx : sidx / S);
      s[1] = static_cast<int>(d == 1 ? 0 : sidx % S);
    };
    for (long start = 0; start < midpoints; start += kChunk) {
      const long stop = std::min(midpoints, start + kChunk);
#pragma omp parallel for schedule(dynamic, 1)
      for (long sidx = start; sidx < stop; ++sidx) {
        int s[2];
        midpoint(sidx, s);
        Vec m(d);
        for (int ax = 0; ax < d; ++ax) m(ax) = -g_.L() + 0.5 * h * s[ax];
        Complex* work = buf.col(sidx - start).data();
        for (long k = 0; k < n; ++k)
          work[fidx[static_cast<std::size_t>(k)]] =
              a.x_independent() ? xi_row(k) : a(m, es[static_cast<std::size_t>(k)]);
        fft.backward(work);
      }
      for (long sidx = start; sidx < stop; ++sidx) {
        int s[2];
        midpoint(sidx, s);
        const Complex* work = buf.col(sidx - start).data();
        int lo[2], hi[2];
        for (int ax = 0; ax < d; ++ax) {
          lo[ax] = std::max(0, s[ax] - (N - 1));
          hi[ax] = std::min(N - 1, s[ax]);
        }
        if (d == 1) {
          for (int i = lo[0]; i <= hi[0]; ++i) {
            int j = s[0] - i;
            int diff = ((i - j) % N + N) % N;
            visit(static_cast<long>(i), static_cast<long>(j), norm * work[diff]);
          }
        } else {
          for (int i1 = lo[0]; i1 <= hi[0]; ++i1) {
            int j1 = s[0] - i1;
            int d1 = ((i1 - j1) % N + N) % N;
            for (int i2 = lo[1]; i2 <= hi[1]; ++i2) {
              int j2 = s[1] - i2;
              int d2 = ((i2 - j2) % N + N) % N;
              visit(static_cast<long>(i1) * N + i2, static_cast<long>(j1) * N + j2, norm * work[d1 * N + d2]);
            }
          }
        }
      }
    }
  }

  DenseMatrix weyl_kernel(const Symbol& a) const {
    g_.require_dense();
    const long n = g_.size();
    const double vol = g_.cell_volume();
    DenseMatrix K(n, n);
    const DenseMatrix* W = omega_table();
    weyl_pairs(a, [&](long i, long j, Complex v) { K(i, j) = vol * v * (W ? (*W)(i, j) : Complex(1.0)); });
    return K;
  }

  WaveFunction apply_weyl(const Symbol& a, const WaveFunction& u) const {
    require(u.grid == g_, "apply_weyl: grid mismatch");
    const long n = g_.size();
    const double vol = g_.cell_volume();
    const DenseMatrix* W = omega_table();
    DenseVector out = DenseVector::Zero(n);
    weyl_pairs(a, [&](long i, long j, Complex v) { out(i) += v * (W ? (*W)(i, j) : omega(i, j)) * u.values(j); });
    return WaveFunction(g_, vol * out);
  }

  // ---- amplitude kernels: left quantization and FIOs ----------------------

  // K_ij = N^-d omega_ij sum_k e^{i(U_ik - <y_j, eta_k>)} amp(i, k).
  template <class Amp>
  DenseMatrix amplitude_kernel(Amp&& amp, const PhaseSamples* U) const {
    g_.require_dense();
    const long n = g_.size();
    const double norm = std::pow(static_cast<double>(g_.N()), -g_.dim());
    auto es = g_.freqs();
    const DenseMatrix* W = omega_table();
    DenseMatrix K(n, n);
#pragma omp parallel
    {
      DenseVector gk(n), row(n), work(n);
#pragma omp for schedule(static)
      for (long i = 0; i < n; ++i) {
        const Vec& x = xs_[static_cast<std::size_t>(i)];
        for (long k = 0; k < n; ++k) {
          double ph = U ? (*U)(i, k) : x.dot(es[static_cast<std::size_t>(k)]);
          gk(k) = std::polar(1.0, ph) * amp(i, k);
        }
        tr_.sum_forward_from_freq(gk.data(), row.data(), work.data());
        for (long j = 0; j < n; ++j) K(i, j) = norm * row(j) * (W ? (*W)(i, j) : omega(i, j));
      }
    }
    return K;
  }

  template <class Amp>
  WaveFunction apply_amplitude(Amp&& amp, const PhaseSamples* U, const WaveFunction& u) const {
    require(u.grid == g_, "apply: grid mismatch");
    const long n = g_.size();
    const double norm = std::pow(static_cast<double>(g_.N()), -g_.dim());
    auto es = g_.freqs();
    DenseVector out(n);
    DenseVector shared_hat;
    if (!magnetic()) {
      shared_hat.resize(n);
      DenseVector work(n);
      tr_.sum_forward(u.values.data(), shared_hat.data(), work.data());
    }
#pragma omp parallel
    {
      DenseVector w(n), hat(n), work(n);
#pragma omp for schedule(static)
      for (long i = 0; i < n; ++i) {
        const Vec& x = xs_[static_cast<std::size_t>(i)];
        const DenseVector* uh = &shared_hat;
        if (magnetic()) {
          for (long j = 0; j < n; ++j) w(j) = omega(i, j) * u.values(j);
          tr_.sum_forward(w.data(), hat.data(), work.data());
          uh = &hat;
        }
        Complex acc = 0.0;
        for (long k = 0; k < n; ++k) {
          double ph = U ? (*U)(i, k) : x.dot(es[static_cast<std::size_t>(k)]);
          acc += std::polar(1.0, ph) * amp(i, k) * (*uh)(k);
        }
        out(i) = norm * acc;
      }
    }
    return WaveFunction(g_, out);
  }

  // Adjoint of apply_amplitude in the weighted inner product.
  template <class Amp>
  WaveFunction apply_amplitude_adjoint(Amp&& amp, const PhaseSamples* U, const WaveFunction& u) const {
    require(u.grid == g_, "apply: grid mismatch");
    const long n = g_.size();
    const double norm = std::pow(static_cast<double>(g_.N()), -g_.dim());
    auto es = g_.freqs();
    DenseVector out = DenseVector::Zero(n);
    DenseVector gk(n), row(n), work(n);
    if (!magnetic()) {
      DenseVector acc = DenseVector::Zero(n);
      for (long i = 0; i < n; ++i) {
        const Vec& x = xs_[static_cast<std::size_t>(i)];
        for (long k = 0; k < n; ++k) {
          double ph = U ? (*U)(i, k) : x.dot(es[static_cast<std::size_t>(k)]);
          acc(k) += std::polar(1.0, -ph) * std::conj(amp(i, k)) * u.values(i);
        }
      }
      tr_.sum_backward(acc.data(), out.data(), work.data());
      return WaveFunction(g_, norm * out);
    }
    for (long i = 0; i < n; ++i) {
      const Vec& x = xs_[static_cast<std::size_t>(i)];
      for (long k = 0; k < n; ++k) {
        double ph = U ? (*U)(i, k) : x.dot(es[static_cast<std::size_t>(k)]);
        gk(k) = std::polar(1.0, -ph) * std::conj(amp(i, k));
      }
      tr_.sum_backward(gk.data(), row.data(), work.data());
      for (long j = 0; j < n; ++j) out(j) += std::conj(omega(i, j)) * u.values(i) * row(j);
    }
    return WaveFunction(g_, norm * out);
  }

  // c(x_i, eta_k) = e^{-i U_ik} sum_j e^{i<y_j, eta_k>} omega(y_j, x_i) M_ij.
  SymbolSamples extract(const DenseMatrix& M, const PhaseSamples* U) const {
    const long n = g_.size();
    require(M.rows() == n && M.cols() == n, "extract_symbol: matrix size does not match grid");
    auto es = g_.freqs();
    const DenseMatrix* W = omega_table();
    SymbolSamples c(n, n);
#pragma omp parallel
    {
      DenseVector w(n), row(n), work(n);
#pragma omp for schedule(static)
      for (long i = 0; i < n; ++i) {
        const Vec& x = xs_[static_cast<std::size_t>(i)];
        for (long j = 0; j < n; ++j) w(j) = std::conj(W ? (*W)(i, j) : omega(i, j)) * M(i, j);
        tr_.sum_backward_to_freq(w.data(), row.data(), work.data());
        for (long k = 0; k < n; ++k) {
          double ph = U ? (*U)(i, k) : x.dot(es[static_cast<std::size_t>(k)]);
          c(i, k) = std::polar(1.0, -ph) * row(k);
        }
      }
    }
    return c;
  }

 private:
  struct OmegaTable {
    std::once_flag once;
    DenseMatrix table;
  };

  Grid g_;
  VectorPotential A_;
  Transform tr_;
  std::vector<Vec> xs_;
  std::shared_ptr<OmegaTable> omega_;
};

// Amplitude adaptors.
struct SymbolAmplitude {
  const Symbol* a;
  const std::vector<Vec>* xs;
  std::vector<Vec> es;
  DenseVector row;  // x-independent fast path
  SymbolAmplitude(const Symbol& s, const Quantizer& q) : a(&s), xs(&q.points()), es(q.grid().freqs()) {
    if (s.x_independent()) {
      row.resize(static_cast<long>(es.size()));
      for (std::size_t k = 0; k < es.size(); ++k) row(static_cast<long>(k)) = s((*xs)[0], es[k]);
    }
  }
  Complex operator()(long i, long k) const {
    if (row.size()) return row(k);
    return (*a)((*xs)[static_cast<std::size_t>(i)], es[static_cast<std::size_t>(k)]);
  }
};

struct SampleAmplitude {
  const SymbolSamples* s;
  Complex operator()(long i, long k) const { return (*s)(i, k); }
};

// ---- public API -----------------------------------------------------------

inline ApplyResult with_padding_check(WaveFunction out, const WaveFunction& in) {
  ApplyResult r{std::move(out), {}};
  double leak = padding_leak(in);
  if (leak > 1e-12)
    r.warnings.push_back("input not confined to the central half of the box (relative leak " +
                         std::to_string(leak) + ")");
  return r;
}

inline ApplyResult psido_apply_weyl(const Quantizer& q, const Symbol& a, const WaveFunction& u) {
  return with_padding_check(q.apply_weyl(a, u), u);
}

inline ApplyResult psido_apply_left(const Quantizer& q, const Symbol& b, const WaveFunction& u) {
  SymbolAmplitude amp(b, q);
  return with_padding_check(q.apply_amplitude(amp, nullptr, u), u);
}

inline ApplyResult fio_apply(const Quantizer& q, const SymbolSamples& amp, const PhaseSamples& U,
                             const WaveFunction& u) {
  return with_padding_check(q.apply_amplitude(SampleAmplitude{&amp}, &U, u), u);
}

inline ApplyResult fio_apply(const Quantizer& q, const Symbol& a, const PhaseSamples& U, const WaveFunction& u) {
  SymbolAmplitude amp(a, q);
  return with_padding_check(q.apply_amplitude(amp, &U, u), u);
}

inline ApplyResult fio_adjoint_apply(const Quantizer& q, const SymbolSamples& amp, const PhaseSamples& U,
                                     const WaveFunction& u) {
  return with_padding_check(q.apply_amplitude_adjoint(SampleAmplitude{&amp}, &U, u), u);
}

inline ApplyResult fio_adjoint_apply(const Quantizer& q, const Symbol& a, const PhaseSamples& U,
                                     const WaveFunction& u) {
  SymbolAmplitude amp(a, q);
  return with_padding_check(q.apply_amplitude_adjoint(amp, &U, u), u);
}

inline GridOperator weyl_operator(const Quantizer& q, const Symbol& a) {
  return {q.grid(), q.weyl_kernel(a), KernelKind::Weyl, {{"symbol", a.name()}, {"potential", q.potential().name()}}};
}

inline GridOperator left_operator(const Quantizer& q, const Symbol& b) {
  SymbolAmplitude amp(b, q);
  return {q.grid(), q.amplitude_kernel(amp, nullptr), KernelKind::Left,
          {{"symbol", b.name()}, {"potential", q.potential().name()}}};
}

inline GridOperator fio_operator(const Quantizer& q, const SymbolSamples& amp, const PhaseSamples& U) {
  return {q.grid(), q.amplitude_kernel(SampleAmplitude{&amp}, &U), KernelKind::Fio,
          {{"potential", q.potential().name()}}};
}

inline GridOperator fio_operator(const Quantizer& q, const Symbol& a, const PhaseSamples& U) {
  SymbolAmplitude amp(a, q);
  return {q.grid(), q.amplitude_kernel(amp, &U), KernelKind::Fio,
          {{"symbol", a.name()}, {"potential", q.potential().name()}}};
}

inline GridOperator fio_adjoint_operator(const Quantizer& q, const Symbol& a, const PhaseSamples& U) {
  return fio_operator(q, a, U).adjoint();
}

// Dense kernel of the requested kind; U is required for fio and fio_adjoint.
inline GridOperator kernel_matrix(KernelKind kind, const Quantizer& q, const Symbol& a,
                                  const PhaseSamples* U = nullptr) {
  switch (kind) {
    case KernelKind::Weyl: return weyl_operator(q, a);
    case KernelKind::Left: return left_operator(q, a);
    case KernelKind::Fio:
      require(U != nullptr, "kernel_matrix: fio kernels need a phase");
      return fio_operator(q, a, *U);
    case KernelKind::FioAdjoint:
      require(U != nullptr, "kernel_matrix: fio kernels need a phase");
      return fio_adjoint_operator(q, a, *U);
    case KernelKind::Composite: break;
  }
  throw ConfigError("kernel_matrix: composite kernels are built by operator products");
}

// Symbol of a kernel relative to the phase U (standard phase when null).
inline SymbolSamples extract_symbol(const Quantizer& q, const GridOperator& K, const PhaseSamples* U = nullptr) {
  require(K.grid == q.grid(), "extract_symbol: grid mismatch");
  return q.extract(K.matrix, U);
}

// e^{i phi(x_i)} M_ij e^{-i phi(y_j)}.
inline GridOperator gauge_conjugate(const GridOperator& K, const GaugeFunction& phi) {
  const long n = K.grid.size();
  DenseVector e(n);
  for (long i = 0; i < n; ++i) e(i) = std::polar(1.0, phi(K.grid.point(i)));
  GridOperator r = K;
  r.matrix = e.asDiagonal() * K.matrix * e.conjugate().asDiagonal();
  r.meta["gauge"] = phi.name();
  return r;
}

inline WaveFunction multiply_phase(const WaveFunction& u, const GaugeFunction& phi, double sign) {
  WaveFunction r = u;
  for (long i = 0; i < u.grid.size(); ++i) r.values(i) *= std::polar(1.0, sign * phi(u.grid.point(i)));
  return r;
}

}  // namespace magfio
