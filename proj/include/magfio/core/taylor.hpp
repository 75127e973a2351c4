#pragma once

// Truncated multivariate Taylor polynomials ("jets") used for automatic
// differentiation of symbols, fields and Hamiltonians.

#include "magfio/core/types.hpp"

#include <boost/container/small_vector.hpp>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace magfio {

inline constexpr int kMaxJetVars = kMaxPhaseDim;
inline constexpr int kMaxJetOrder = 12;

using MultiIndex = std::array<std::uint8_t, kMaxJetVars>;

inline double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

inline double multi_factorial(const MultiIndex& a, int nvars) {
  double r = 1.0;
  for (int v = 0; v < nvars; ++v) r *= factorial(a[v]);
  return r;
}

inline int multi_degree(const MultiIndex& a, int nvars) {
  int s = 0;
  for (int v = 0; v < nvars; ++v) s += a[v];
  return s;
}

// Graded enumeration of the monomials of total degree <= order in nvars
// variables together with the multiplication table.
class MonomialTable {
 public:
  struct Product {
    std::uint16_t i, j, k;
  };

  MonomialTable(int nvars, int order) : nvars_(nvars), order_(order) {
    if (nvars < 1 || nvars > kMaxJetVars) throw CapError("jet: unsupported variable count");
    if (order < 0 || order > kMaxJetOrder) throw CapError("jet: order exceeds cap");
    base_ = order + 1;
    int codes = 1;
    for (int v = 0; v < nvars; ++v) codes *= base_;
    lookup_.assign(static_cast<std::size_t>(codes), -1);
    MultiIndex cur{};
    for (int deg = 0; deg <= order; ++deg) {
      degree_start_.push_back(static_cast<int>(exps_.size()));
      enumerate(deg, 0, cur);
    }
    degree_start_.push_back(static_cast<int>(exps_.size()));
    for (std::size_t i = 0; i < exps_.size(); ++i) lookup_[encode(exps_[i])] = static_cast<int>(i);
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      for (std::size_t j = 0; j < exps_.size(); ++j) {
        MultiIndex s{};
        int deg = 0;
        for (int v = 0; v < nvars; ++v) {
          s[v] = static_cast<std::uint8_t>(exps_[i][v] + exps_[j][v]);
          deg += s[v];
        }
        if (deg > order) continue;
        products_.push_back({static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j),
                             static_cast<std::uint16_t>(lookup_[encode(s)])});
      }
    }
  }

  static const MonomialTable& get(int nvars, int order) {
    static std::array<std::atomic<const MonomialTable*>, (kMaxJetVars + 1) * (kMaxJetOrder + 1)>
        slots{};
    static std::mutex mutex;
    static std::vector<std::unique_ptr<MonomialTable>> owned;
    if (nvars < 1 || nvars > kMaxJetVars || order < 0 || order > kMaxJetOrder)
      throw CapError("jet: requested (variables, order) exceeds cap");
    auto& slot = slots[static_cast<std::size_t>(nvars * (kMaxJetOrder + 1) + order)];
    if (const MonomialTable* t = slot.load(std::memory_order_acquire)) return *t;
    std::lock_guard lock(mutex);
    if (const MonomialTable* t = slot.load(std::memory_order_relaxed)) return *t;
    owned.push_back(std::make_unique<MonomialTable>(nvars, order));
    slot.store(owned.back().get(), std::memory_order_release);
    return *owned.back();
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exps_.size()); }
  const MultiIndex& exponent(int i) const { return exps_[static_cast<std::size_t>(i)]; }
  const std::vector<Product>& products() const { return products_; }
  int degree_begin(int deg) const { return degree_start_[static_cast<std::size_t>(deg)]; }
  int degree_end(int deg) const { return degree_start_[static_cast<std::size_t>(deg) + 1]; }

  // Position of a multi-index, or -1 when its degree exceeds the order.
  int index(const MultiIndex& a) const {
    int deg = 0;
    for (int v = 0; v < nvars_; ++v) deg += a[v];
    if (deg > order_) return -1;
    return lookup_[encode(a)];
  }

  int variable_index(int v) const {
    MultiIndex a{};
    a[static_cast<std::size_t>(v)] = 1;
    return index(a);
  }

 private:
  std::size_t encode(const MultiIndex& a) const {
    std::size_t code = 0;
    for (int v = nvars_ - 1; v >= 0; --v) code = code * static_cast<std::size_t>(base_) + a[v];
    return code;
  }

  void enumerate(int remaining, int var, MultiIndex& cur) {
    if (var == nvars_ - 1) {
      cur[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(remaining);
      exps_.push_back(cur);
      cur[static_cast<std::size_t>(var)] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      cur[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(k);
      enumerate(remaining - k, var + 1, cur);
    }
    cur[static_cast<std::size_t>(var)] = 0;
  }

  int nvars_;
  int order_;
  int base_ = 1;
  std::vector<MultiIndex> exps_;
  std::vector<int> degree_start_;
  std::vector<int> lookup_;
  std::vector<Product> products_;
};

template <class T>
class Taylor {
 public:
  using value_type = T;
  using Storage = boost::container::small_vector<T, 28>;

  Taylor() = default;
  Taylor(const MonomialTable& tab, T value) : tab_(&tab), c_(static_cast<std::size_t>(tab.size()), T{}) {
    c_[0] = value;
  }

  static Taylor variable(const MonomialTable& tab, int v, T value) {
    Taylor r(tab, value);
    if (tab.order() >= 1) r.c_[static_cast<std::size_t>(tab.variable_index(v))] = T{1};
    return r;
  }

  template <class U>
  static Taylor cast(const Taylor<U>& other) {
    Taylor r(other.table(), T{});
    for (int i = 0; i < other.size(); ++i) r.c_[static_cast<std::size_t>(i)] = T(other[i]);
    return r;
  }

  const MonomialTable& table() const { return *tab_; }
  int size() const { return static_cast<int>(c_.size()); }
  int order() const { return tab_->order(); }
  int nvars() const { return tab_->nvars(); }

  T value() const { return c_[0]; }
  const T& operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  T& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  // Taylor coefficient d^a f / a!.
  T coefficient(const MultiIndex& a) const {
    int i = tab_->index(a);
    return i < 0 ? T{} : c_[static_cast<std::size_t>(i)];
  }

  // Partial derivative d^a f at the expansion point.
  T derivative(const MultiIndex& a) const {
    return coefficient(a) * multi_factorial(a, tab_->nvars());
  }

  T partial(int v) const {
    MultiIndex a{};
    a[static_cast<std::size_t>(v)] = 1;
    return derivative(a);
  }

  T partial(int v, int w) const {
    MultiIndex a{};
    a[static_cast<std::size_t>(v)] += 1;
    a[static_cast<std::size_t>(w)] += 1;
    return derivative(a);
  }

  // Jet of d^nu f, truncated to the given table (whose order must not exceed
  // order() - |nu|).
  Taylor shifted(const MultiIndex& nu, const MonomialTable& target) const {
    const int n = tab_->nvars();
    Taylor r(target, T{});
    for (int g = 0; g < target.size(); ++g) {
      MultiIndex gamma = target.exponent(g);
      MultiIndex sum{};
      double w = 1.0;
      for (int v = 0; v < n; ++v) {
        sum[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(gamma[v] + nu[v]);
        for (int k = gamma[v] + 1; k <= gamma[v] + nu[v]; ++k) w *= k;
      }
      int idx = tab_->index(sum);
      if (idx >= 0) r.c_[static_cast<std::size_t>(g)] = c_[static_cast<std::size_t>(idx)] * w;
    }
    return r;
  }

  Taylor truncated(const MonomialTable& target) const {
    Taylor r(target, T{});
    for (int g = 0; g < target.size(); ++g) {
      int idx = tab_->index(target.exponent(g));
      if (idx >= 0) r.c_[static_cast<std::size_t>(g)] = c_[static_cast<std::size_t>(idx)];
    }
    return r;
  }

  Taylor& operator+=(const Taylor& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Taylor& operator+=(T s) {
    c_[0] += s;
    return *this;
  }
  Taylor& operator-=(T s) {
    c_[0] -= s;
    return *this;
  }
  Taylor& operator*=(T s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Taylor& operator/=(T s) {
    for (auto& v : c_) v /= s;
    return *this;
  }
  Taylor& operator*=(const Taylor& o) {
    *this = *this * o;
    return *this;
  }

  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor r(*a.tab_, T{});
    for (const auto& p : a.tab_->products()) r.c_[p.k] += a.c_[p.i] * b.c_[p.j];
    return r;
  }

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator+(Taylor a, T s) { return a += s; }
  friend Taylor operator+(T s, Taylor a) { return a += s; }
  friend Taylor operator-(Taylor a, T s) { return a -= s; }
  friend Taylor operator-(T s, const Taylor& a) { return (-a) += s; }
  friend Taylor operator*(Taylor a, T s) { return a *= s; }
  friend Taylor operator*(T s, Taylor a) { return a *= s; }
  friend Taylor operator/(Taylor a, T s) { return a /= s; }
  friend Taylor operator/(T s, const Taylor& a) { return s * reciprocal(a); }
  friend Taylor operator/(const Taylor& a, const Taylor& b) { return a * reciprocal(b); }
  friend Taylor operator-(Taylor a) {
    for (auto& v : a.c_) v = -v;
    return a;
  }

  // f(u) from the derivatives f^(n)(u0), n = 0..order.
  template <class D>
  Taylor compose(const D& derivs) const {
    const int K = order();
    Taylor h = *this;
    h.c_[0] = T{};
    Taylor r(*tab_, derivs[static_cast<std::size_t>(K)] / T(factorial(K)));
    for (int n = K - 1; n >= 0; --n) {
      r = r * h;
      r.c_[0] += derivs[static_cast<std::size_t>(n)] / T(factorial(n));
    }
    return r;
  }

  friend Taylor reciprocal(const Taylor& a) { return pow(a, -1.0); }

  friend Taylor pow(const Taylor& a, double p) {
    std::array<T, kMaxJetOrder + 1> d{};
    T u0 = a.value();
    T coeff{1};
    for (int n = 0; n <= a.order(); ++n) {
      d[static_cast<std::size_t>(n)] = coeff * std::pow(u0, T(p - n));
      coeff *= T(p - n);
    }
    return a.compose(d);
  }

  friend Taylor sqrt(const Taylor& a) { return pow(a, 0.5); }

  friend Taylor exp(const Taylor& a) {
    std::array<T, kMaxJetOrder + 1> d{};
    d.fill(std::exp(a.value()));
    return a.compose(d);
  }

  friend Taylor log(const Taylor& a) {
    std::array<T, kMaxJetOrder + 1> d{};
    T u0 = a.value();
    d[0] = std::log(u0);
    for (int n = 1; n <= a.order(); ++n)
      d[static_cast<std::size_t>(n)] = T((n % 2 ? 1.0 : -1.0) * factorial(n - 1)) / std::pow(u0, T(n));
    return a.compose(d);
  }

  friend Taylor sin(const Taylor& a) {
    std::array<T, kMaxJetOrder + 1> d{};
    T s = std::sin(a.value()), c = std::cos(a.value());
    const T cyc[4] = {s, c, -s, -c};
    for (int n = 0; n <= a.order(); ++n) d[static_cast<std::size_t>(n)] = cyc[n % 4];
    return a.compose(d);
  }

  friend Taylor cos(const Taylor& a) {
    std::array<T, kMaxJetOrder + 1> d{};
    T s = std::sin(a.value()), c = std::cos(a.value());
    const T cyc[4] = {c, -s, -c, s};
    for (int n = 0; n <= a.order(); ++n) d[static_cast<std::size_t>(n)] = cyc[n % 4];
    return a.compose(d);
  }

 private:
  const MonomialTable* tab_ = nullptr;
  Storage c_;
};

using RealJet = Taylor<double>;
using ComplexJet = Taylor<Complex>;

// Uniform helpers so that formulas can be written once for plain scalars and
// for jets.
template <class S>
struct ScalarTraits {
  static double real_value(const S& s) { return std::real(s); }
};
template <class T>
struct ScalarTraits<Taylor<T>> {
  static double real_value(const Taylor<T>& s) { return std::real(s.value()); }
};

template <class S>
double real_value(const S& s) {
  return ScalarTraits<S>::real_value(s);
}

}  // namespace magfio
