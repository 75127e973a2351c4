#pragma once

#include "magfio/core/types.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <span>
#include <vector>

namespace magfio {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

template <int N>
QuadratureRule gauss_unit_interval() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& abs = G::abscissa();
  const auto& w = G::weights();
  QuadratureRule r;
  for (std::size_t i = abs.size(); i-- > 0;) {
    if (abs[i] == 0.0) continue;
    r.nodes.push_back(0.5 * (1.0 - abs[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  if (N % 2 == 1) {
    r.nodes.push_back(0.5);
    r.weights.push_back(0.5 * w[0]);
  }
  for (std::size_t i = 0; i < abs.size(); ++i) {
    if (abs[i] == 0.0) continue;
    r.nodes.push_back(0.5 * (1.0 + abs[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

}  // namespace detail

// Gauss-Legendre rule on [0, 1].
inline const QuadratureRule& gauss_legendre(int n) {
  switch (n) {
    case 4: { static const auto r = detail::gauss_unit_interval<4>(); return r; }
    case 8: { static const auto r = detail::gauss_unit_interval<8>(); return r; }
    case 12: { static const auto r = detail::gauss_unit_interval<12>(); return r; }
    case 16: { static const auto r = detail::gauss_unit_interval<16>(); return r; }
    case 20: { static const auto r = detail::gauss_unit_interval<20>(); return r; }
    case 24: { static const auto r = detail::gauss_unit_interval<24>(); return r; }
    case 32: { static const auto r = detail::gauss_unit_interval<32>(); return r; }
    default: throw ConfigError("gauss_legendre: supported node counts are 4, 8, 12, 16, 20, 24, 32");
  }
}

// Composite Simpson rule over uniformly spaced samples (odd count).
template <class T>
T simpson(std::span<const T> f, double h) {
  const std::size_t n = f.size();
  if (n < 3 || n % 2 == 0) throw ConfigError("simpson: need an odd number (>= 3) of samples");
  T s = f[0] + f[n - 1];
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i] * (i % 2 ? 4.0 : 2.0);
  return s * (h / 3.0);
}

// Cumulative integral on uniform nodes with a fourth-order local rule.
template <class T>
std::vector<T> cumulative_integral(std::span<const T> f, double h) {
  const std::size_t n = f.size();
  std::vector<T> out(n, T{});
  if (n < 2) return out;
  if (n < 4) {
    for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + (f[i - 1] + f[i]) * (0.5 * h);
    return out;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    T piece;
    if (i == 0)
      piece = (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * (h / 24.0);
    else if (i + 2 == n)
      piece = (f[n - 1] * 9.0 + f[n - 2] * 19.0 - f[n - 3] * 5.0 + f[n - 4]) * (h / 24.0);
    else
      piece = (-f[i - 1] + f[i] * 13.0 + f[i + 1] * 13.0 - f[i + 2]) * (h / 24.0);
    out[i + 1] = out[i] + piece;
  }
  return out;
}

}  // namespace magfio
