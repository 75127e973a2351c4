#pragma once

#include "magfio/core/spec.hpp"
#include "magfio/symbols/symbol.hpp"

#include <cmath>

namespace magfio {

namespace formulas {

template <class S>
S constant_like(const S& ref, double c) {
  return ref * 0.0 + c;
}

template <class S>
S norm_squared(const S* xi, int d) {
  S r = xi[0] * xi[0];
  for (int i = 1; i < d; ++i) r = r + xi[i] * xi[i];
  return r;
}

// s(r) = g(r - 1) / (g(r - 1) + g(2 - r)), g(t) = exp(-1/t) for t > 0.
template <class S>
S smooth_step(const S& r) {
  using std::exp;
  const double r0 = real_value(r);
  if (r0 <= 1.0) return constant_like(r, 0.0);
  if (r0 >= 2.0) return constant_like(r, 1.0);
  S g1 = exp(-1.0 / (r - 1.0));
  S g2 = exp(-1.0 / (2.0 - r));
  return g1 / (g1 + g2);
}

// Canonical high-pass cutoff: 0 for |xi| <= rho, 1 for |xi| >= 2 rho.
template <class S>
S high_pass(const S* xi, int d, double rho) {
  using std::sqrt;
  S n2 = norm_squared(xi, d);
  const double v = real_value(n2);
  if (v <= rho * rho) return constant_like(n2, 0.0);
  if (v >= 4.0 * rho * rho) return constant_like(n2, 1.0);
  return smooth_step(sqrt(n2) / rho);
}

template <class S>
S japanese(const S* xi, int d) {
  using std::sqrt;
  return sqrt(norm_squared(xi, d) + 1.0);
}

struct Relativistic {
  static constexpr bool real = true;
  int d;
  template <class S>
  S operator()(const S*, const S* xi) const { return japanese(xi, d); }
};

struct AbsXi {
  static constexpr bool real = true;
  int d;
  template <class S>
  S operator()(const S*, const S* xi) const {
    using std::sqrt;
    return sqrt(norm_squared(xi, d));
  }
};

struct HomogRelativistic {
  static constexpr bool real = true;
  int d;
  double rho;
  template <class S>
  S operator()(const S*, const S* xi) const {
    using std::sqrt;
    S h = high_pass(xi, d, rho);
    if (real_value(h) == 0.0) return h;
    return h * sqrt(norm_squared(xi, d));
  }
};

struct Aniso {
  static constexpr bool real = true;
  int d;
  double c;
  template <class S>
  S operator()(const S* x, const S* xi) const {
    using std::sin;
    S j = japanese(xi, d);
    return j + sin(x[0]) * xi[0] * c / j;
  }
};

struct Tilted {
  static constexpr bool real = true;
  int d;
  double c;
  template <class S>
  S operator()(const S* x, const S* xi) const {
    using std::sin;
    return japanese(xi, d) + sin(x[0]) * xi[0] * c;
  }
};

struct TiltedPrincipal {
  static constexpr bool real = true;
  int d;
  double c;
  template <class S>
  S operator()(const S* x, const S* xi) const {
    using std::sin;
    using std::sqrt;
    return sqrt(norm_squared(xi, d)) + sin(x[0]) * xi[0] * c;
  }
};

struct One {
  static constexpr bool real = true;
  template <class S>
  S operator()(const S* x, const S*) const { return constant_like(x[0], 1.0); }
};

struct GaussianBump {
  static constexpr bool real = true;
  int d;
  double width;
  template <class S>
  S operator()(const S* x, const S*) const {
    using std::exp;
    return exp(norm_squared(x, d) * (-0.5 / (width * width)));
  }
};

// <xi>^m (1 + c cos(k x_1 + phase)).
struct Modulated {
  static constexpr bool real = true;
  int d;
  double c, m, k, phase;
  template <class S>
  S operator()(const S* x, const S* xi) const {
    using std::cos;
    using std::pow;
    return pow(norm_squared(xi, d) + 1.0, 0.5 * m) * (cos(x[0] * k + phase) * c + 1.0);
  }
};

// Complex order-0 amplitude (1 + c cos x_1) (1 + i s xi_1 / <xi>).
struct Twisted {
  static constexpr bool real = false;
  int d;
  double c, s;
  template <class S>
  S operator()(const S* x, const S* xi) const {
    using std::cos;
    S j = japanese(xi, d);
    return (cos(x[0]) * c + 1.0) * (xi[0] / j * Complex(0.0, s) + 1.0);
  }
};

struct XDotXi {
  static constexpr bool real = true;
  int d;
  template <class S>
  S operator()(const S* x, const S* xi) const {
    S r = x[0] * xi[0];
    for (int i = 1; i < d; ++i) r = r + x[i] * xi[i];
    return r;
  }
};

}  // namespace formulas

inline Symbol::Info symbol_info(std::string name, double order, bool x_indep, bool real = true) {
  Symbol::Info i;
  i.name = std::move(name);
  i.order = order;
  i.x_independent = x_indep;
  i.is_real = real;
  return i;
}

inline Symbol abs_xi(int d) {
  auto info = symbol_info("abs_xi", 1.0, true);
  info.xi_floor = 1e-8;
  return make_formula_symbol(d, formulas::AbsXi{d}, info);
}

inline Symbol with_principal(Symbol a, const Symbol& p) {
  auto info = a.info();
  info.principal = std::make_shared<const Symbol>(p);
  return a.with_info(std::move(info));
}

inline Symbol relativistic(int d) {
  return with_principal(make_formula_symbol(d, formulas::Relativistic{d}, symbol_info("relativistic", 1.0, true)),
                        abs_xi(d));
}

inline Symbol homog_relativistic(int d, double rho) {
  require(rho > 0.0, "homog_relativistic: rho must be positive");
  return with_principal(
      make_formula_symbol(d, formulas::HomogRelativistic{d, rho}, symbol_info("homog_relativistic", 1.0, true)),
      abs_xi(d));
}

inline Symbol aniso(int d, double c) {
  return with_principal(make_formula_symbol(d, formulas::Aniso{d, c}, symbol_info("aniso", 1.0, false)),
                        abs_xi(d));
}

inline Symbol tilted(int d, double c) {
  require(std::abs(c) < 1.0, "tilted: |c| < 1 required for ellipticity");
  auto p_info = symbol_info("tilted_principal", 1.0, false);
  p_info.xi_floor = 1e-8;
  auto p = make_formula_symbol(d, formulas::TiltedPrincipal{d, c}, p_info);
  return with_principal(make_formula_symbol(d, formulas::Tilted{d, c}, symbol_info("tilted", 1.0, false)), p);
}

inline Symbol one_symbol(int d) { return make_formula_symbol(d, formulas::One{}, symbol_info("one", 0.0, true)); }

inline Symbol gaussian_bump(int d, double width) {
  return make_formula_symbol(d, formulas::GaussianBump{d, width}, symbol_info("gaussian_bump", 0.0, false));
}

inline Symbol modulated(int d, double c, double m, double k = 1.0, double phase = 0.0) {
  return make_formula_symbol(d, formulas::Modulated{d, c, m, k, phase},
                             symbol_info("modulated", m, c == 0.0));
}

inline Symbol twisted(int d, double c, double s) {
  return make_formula_symbol(d, formulas::Twisted{d, c, s}, symbol_info("twisted", 0.0, c == 0.0, s == 0.0));
}

inline Symbol x_dot_xi(int d) {
  return make_formula_symbol(d, formulas::XDotXi{d}, symbol_info("x_dot_xi", 1.0, false));
}

// chi_rho(xi): 0 for |xi| <= rho, 1 for |xi| >= 2 rho.
struct CutoffFormula {
  static constexpr bool real = true;
  int d;
  double rho;
  template <class S>
  S operator()(const S*, const S* xi) const { return formulas::high_pass(xi, d, rho); }
};

inline Symbol cutoff_symbol(int d, double rho = 1.0) {
  require(rho > 0.0, "cutoff: rho must be positive");
  return make_formula_symbol(d, CutoffFormula{d, rho}, symbol_info("chi", 0.0, true));
}

inline double cutoff_value(const Vec& xi, double rho = 1.0) {
  return formulas::high_pass(xi.data(), static_cast<int>(xi.size()), rho);
}

// chi_rho * a.
inline Symbol cutoff(const Symbol& a, double rho = 1.0) {
  Symbol r = cutoff_symbol(a.dim(), rho) * a;
  auto info = a.info();
  info.name = "chi*" + a.name();
  info.xi_floor = 0.0;
  return r.with_info(info);
}

// (1 - chi_rho) * a: leaves frequencies |xi| <= rho untouched and removes
// |xi| >= 2 rho.
inline Symbol band_limit(const Symbol& a, double rho) {
  Symbol lp = linear_combination(one_symbol(a.dim()), 1.0, cutoff_symbol(a.dim(), rho), -1.0);
  Symbol r = lp * a;
  auto info = a.info();
  info.name = "bandlimit(" + a.name() + ")";
  info.order = -std::numeric_limits<double>::infinity();
  info.principal.reset();
  return r.with_info(info);
}

// Truncated principal part chi_rho * a0.
inline Symbol principal_truncation(const Symbol& a0, double rho = 1.0) {
  Symbol r = cutoff(a0, rho);
  auto info = r.info();
  info.name = "chi*" + a0.name();
  info.principal = std::make_shared<const Symbol>(a0);
  return r.with_info(info);
}

inline std::vector<std::string> symbol_names() {
  return {"relativistic", "homog_relativistic", "aniso",     "tilted",  "one",
          "gaussian_bump", "modulated",         "twisted",   "x_dot_xi", "abs_xi"};
}

inline Symbol make_symbol(const NamedSpec& s, int d) {
  require(d >= 1 && d <= kMaxDim, "symbol: dimension must be 1..3");
  if (s.name == "relativistic") { s.check_keys({}); return relativistic(d); }
  if (s.name == "homog_relativistic") { s.check_keys({"rho"}); return homog_relativistic(d, s.get("rho", 1.0)); }
  if (s.name == "aniso") { s.check_keys({"c"}); return aniso(d, s.get("c", 0.3)); }
  if (s.name == "tilted") { s.check_keys({"c"}); return tilted(d, s.get("c", 0.3)); }
  if (s.name == "one") { s.check_keys({}); return one_symbol(d); }
  if (s.name == "gaussian_bump") { s.check_keys({"width"}); return gaussian_bump(d, s.get("width", 1.0)); }
  if (s.name == "modulated") {
    s.check_keys({"c", "m", "k", "phase"});
    return modulated(d, s.get("c", 0.3), s.get("m", 0.0), s.get("k", 1.0), s.get("phase", 0.0));
  }
  if (s.name == "twisted") { s.check_keys({"c", "s"}); return twisted(d, s.get("c", 0.3), s.get("s", 0.3)); }
  if (s.name == "x_dot_xi") { s.check_keys({}); return x_dot_xi(d); }
  if (s.name == "abs_xi") { s.check_keys({}); return abs_xi(d); }
  throw ConfigError("unknown symbol '" + s.name + "'");
}

}  // namespace magfio
