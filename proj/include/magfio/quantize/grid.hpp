#pragma once

#include "magfio/core/types.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace magfio {

inline constexpr long kDenseCap = 4096;

// Uniform periodic grid on [-L, L)^d: x_j = -L + j h, h = 2L/N, dual
// frequencies eta_m = (pi/L) m, m in [-N/2, N/2). Flat indices are row-major
// with the first axis slowest; frequency index k stores m = k - N/2.
class Grid {
 public:
  Grid() = default;
  Grid(int d, int N, double L) : d_(d), N_(N), L_(L) {
    require(d >= 1 && d <= 2, "grid: dimension must be 1 or 2");
    require(N >= 4 && N % 2 == 0, "grid: N must be even and >= 4");
    require(L > 0.0, "grid: L must be positive");
    size_ = 1;
    for (int i = 0; i < d; ++i) size_ *= N;
  }

  int dim() const { return d_; }
  int N() const { return N_; }
  double L() const { return L_; }
  double h() const { return 2.0 * L_ / N_; }
  double dual_step() const { return kPi / L_; }
  double nyquist() const { return kPi * N_ / (2.0 * L_); }
  long size() const { return size_; }
  double cell_volume() const { return std::pow(h(), d_); }

  void unflatten(long idx, int* out) const {
    for (int a = d_ - 1; a >= 0; --a) {
      out[a] = static_cast<int>(idx % N_);
      idx /= N_;
    }
  }
  long flatten(const int* idx) const {
    long r = 0;
    for (int a = 0; a < d_; ++a) r = r * N_ + idx[a];
    return r;
  }

  Vec point(long idx) const {
    int m[kMaxDim];
    unflatten(idx, m);
    Vec x(d_);
    for (int a = 0; a < d_; ++a) x(a) = -L_ + m[a] * h();
    return x;
  }

  Vec freq(long idx) const {
    int m[kMaxDim];
    unflatten(idx, m);
    Vec xi(d_);
    for (int a = 0; a < d_; ++a) xi(a) = dual_step() * (m[a] - N_ / 2);
    return xi;
  }

  // Sum over axes of the signed frequency integers of a flat frequency index.
  int freq_parity(long idx) const {
    int m[kMaxDim];
    unflatten(idx, m);
    int s = 0;
    for (int a = 0; a < d_; ++a) s += m[a] - N_ / 2;
    return s & 1;
  }

  // Position of frequency index k in FFT (unshifted) order.
  long fft_index(long k) const {
    int m[kMaxDim];
    unflatten(k, m);
    for (int a = 0; a < d_; ++a) m[a] = (m[a] + N_ / 2) % N_;
    return flatten(m);
  }

  std::vector<Vec> points() const {
    std::vector<Vec> v;
    v.reserve(static_cast<std::size_t>(size_));
    for (long i = 0; i < size_; ++i) v.push_back(point(i));
    return v;
  }
  std::vector<Vec> freqs() const {
    std::vector<Vec> v;
    v.reserve(static_cast<std::size_t>(size_));
    for (long i = 0; i < size_; ++i) v.push_back(freq(i));
    return v;
  }

  bool operator==(const Grid& o) const { return d_ == o.d_ && N_ == o.N_ && L_ == o.L_; }

  void require_dense() const {
    if (size_ > kDenseCap)
      throw CapError("dense operator with " + std::to_string(size_) + " rows exceeds the cap of " +
                     std::to_string(kDenseCap));
  }

 private:
  int d_ = 1;
  int N_ = 4;
  double L_ = 1.0;
  long size_ = 4;
};

// In-place unnormalized DFTs of size N^d (sign -1 forward, +1 backward).
class FFT {
 public:
  FFT(int d, int N) : d_(d), N_(N) {
    std::lock_guard lock(mutex());
    auto& cache = plans();
    auto key = std::make_pair(d, N);
    auto it = cache.find(key);
    if (it == cache.end()) {
      int n[2] = {N, N};
      long total = d == 1 ? N : static_cast<long>(N) * N;
      auto* buf = fftw_alloc_complex(static_cast<std::size_t>(total));
      Plans p;
      unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      p.fwd = fftw_plan_dft(d, n, buf, buf, FFTW_FORWARD, flags);
      p.bwd = fftw_plan_dft(d, n, buf, buf, FFTW_BACKWARD, flags);
      fftw_free(buf);
      it = cache.emplace(key, p).first;
    }
    plans_ = it->second;
  }

  void forward(Complex* data) const { fftw_execute_dft(plans_.fwd, as_fftw(data), as_fftw(data)); }
  void backward(Complex* data) const { fftw_execute_dft(plans_.bwd, as_fftw(data), as_fftw(data)); }

 private:
  struct Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
  };
  static fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }
  static std::map<std::pair<int, int>, Plans>& plans() {
    static std::map<std::pair<int, int>, Plans> p;
    return p;
  }

  int d_, N_;
  Plans plans_;
};

// Sampled wave function on a grid.
struct WaveFunction {
  Grid grid;
  DenseVector values;

  WaveFunction() = default;
  WaveFunction(Grid g, DenseVector v) : grid(std::move(g)), values(std::move(v)) {
    require(values.size() == grid.size(), "wave function: sample count does not match grid");
  }

  double norm() const { return std::sqrt(grid.cell_volume()) * values.norm(); }
  Complex inner(const WaveFunction& o) const { return grid.cell_volume() * values.dot(o.values); }
};

// Discrete transforms in natural frequency order:
//   forward:  uhat(eta_k) = h^d sum_j exp(-i <y_j, eta_k>) u_j
//   inverse:  u(x_j) = (2L)^-d sum_k exp(i <x_j, eta_k>) uhat_k
class Transform {
 public:
  explicit Transform(const Grid& g) : g_(g), fft_(g.dim(), g.N()) {
    fft_idx_.resize(static_cast<std::size_t>(g.size()));
    sign_.resize(static_cast<std::size_t>(g.size()));
    for (long k = 0; k < g.size(); ++k) {
      fft_idx_[static_cast<std::size_t>(k)] = g.fft_index(k);
      sign_[static_cast<std::size_t>(k)] = g.freq_parity(k) ? -1.0 : 1.0;
    }
  }

  const Grid& grid() const { return g_; }

  // Unnormalized sum_j exp(-i <y_j, eta_k>) w_j into out (natural order).
  void sum_forward(const Complex* w, Complex* out, Complex* work) const {
    const long n = g_.size();
    std::copy(w, w + n, work);
    fft_.forward(work);
    for (long k = 0; k < n; ++k) {
      out[k] = sign_[static_cast<std::size_t>(k)] * work[fft_idx_[static_cast<std::size_t>(k)]];
    }
  }

  // Unnormalized sum_k exp(+i <y_j, eta_k>) g_k (natural order input).
  void sum_backward(const Complex* gk, Complex* out, Complex* work) const {
    const long n = g_.size();
    for (long k = 0; k < n; ++k)
      work[fft_idx_[static_cast<std::size_t>(k)]] = sign_[static_cast<std::size_t>(k)] * gk[k];
    fft_.backward(work);
    std::copy(work, work + n, out);
  }

  // Unnormalized sum_j exp(+i <y_j, eta_k>) w_j into out (natural order).
  void sum_backward_to_freq(const Complex* w, Complex* out, Complex* work) const {
    const long n = g_.size();
    std::copy(w, w + n, work);
    fft_.backward(work);
    for (long k = 0; k < n; ++k) {
      out[k] = sign_[static_cast<std::size_t>(k)] * work[fft_idx_[static_cast<std::size_t>(k)]];
    }
  }

  // Unnormalized sum_k exp(-i <y_j, eta_k>) g_k (natural order input).
  void sum_forward_from_freq(const Complex* gk, Complex* out, Complex* work) const {
    const long n = g_.size();
    for (long k = 0; k < n; ++k)
      work[fft_idx_[static_cast<std::size_t>(k)]] = sign_[static_cast<std::size_t>(k)] * gk[k];
    fft_.forward(work);
    std::copy(work, work + n, out);
  }

  DenseVector forward(const DenseVector& u) const {
    DenseVector out(g_.size()), work(g_.size());
    sum_forward(u.data(), out.data(), work.data());
    return out * g_.cell_volume();
  }

  DenseVector inverse(const DenseVector& uhat) const {
    DenseVector out(g_.size()), work(g_.size());
    sum_backward(uhat.data(), out.data(), work.data());
    return out * std::pow(2.0 * g_.L(), -g_.dim());
  }

  // Spectral derivative d/dx_axis of periodic samples.
  DenseVector derivative(const DenseVector& u, int axis) const {
    DenseVector uh = forward(u);
    for (long k = 0; k < g_.size(); ++k) {
      double m = g_.freq(k)(axis);
      int idx[kMaxDim];
      g_.unflatten(k, idx);
      if (idx[axis] == 0) m = 0.0;  // Nyquist mode carries no derivative
      uh(k) *= Complex(0.0, m);
    }
    return inverse(uh);
  }

 private:
  Grid g_;
  FFT fft_;
  std::vector<long> fft_idx_;
  std::vector<double> sign_;
};

// Normalized Gaussian packet exp(i <x, xi0>) exp(-|x - x0|^2 / (2 sigma^2)).
inline WaveFunction wave_packet(const Grid& g, const Vec& x0, const Vec& xi0, double sigma) {
  require(x0.size() == g.dim() && xi0.size() == g.dim(), "wave_packet: dimension mismatch");
  require(sigma > 0.0, "wave_packet: sigma must be positive");
  DenseVector v(g.size());
  for (long i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    v(i) = std::polar(std::exp(-(x - x0).squaredNorm() / (2.0 * sigma * sigma)), x.dot(xi0));
  }
  WaveFunction w(g, v);
  w.values /= w.norm();
  return w;
}

// max |u| outside the central half of the box relative to max |u|.
inline double padding_leak(const WaveFunction& u) {
  const Grid& g = u.grid;
  double inside = 0.0, outside = 0.0;
  for (long i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    double a = std::abs(u.values(i));
    if (x.cwiseAbs().maxCoeff() <= 0.5 * g.L())
      inside = std::max(inside, a);
    else
      outside = std::max(outside, a);
  }
  double top = std::max(inside, outside);
  return top == 0.0 ? 0.0 : outside / top;
}

}  // namespace magfio
