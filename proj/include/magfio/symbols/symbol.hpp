#pragma once

#include "magfio/core/taylor.hpp"
#include "magfio/core/types.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace magfio {

// Jet variables are ordered (x_1..x_d, xi_1..xi_d).
struct SymbolDerivatives {
  Complex value;
  CVec dx, dxi;
  CMat dxx, dxxi, dxixi;  // dxxi(j, k) = d^2 / dx_j dxi_k
};

class Symbol {
 public:
  class Model {
   public:
    virtual ~Model() = default;
    virtual int dim() const = 0;
    virtual Complex value(const Vec& x, const Vec& xi) const = 0;
    virtual ComplexJet jet(const Vec& x, const Vec& xi, int order) const = 0;
    virtual int max_jet_order() const { return kMaxJetOrder; }
  };

  struct Info {
    std::string name = "symbol";
    double order = 0.0;
    bool is_real = false;
    bool x_independent = false;
    // Symbols such as |xi| are only used away from the origin in xi.
    double xi_floor = 0.0;
    // Degree-m positively homogeneous principal part, when known.
    std::shared_ptr<const Symbol> principal;
  };

  Symbol() = default;
  Symbol(std::shared_ptr<const Model> model, Info info) : model_(std::move(model)), info_(std::move(info)) {}

  int dim() const { return model_->dim(); }
  double order() const { return info_.order; }
  bool is_real() const { return info_.is_real; }
  bool x_independent() const { return info_.x_independent; }
  double xi_floor() const { return info_.xi_floor; }
  const std::string& name() const { return info_.name; }
  const Info& info() const { return info_; }
  int max_jet_order() const { return model_->max_jet_order(); }
  bool valid() const { return static_cast<bool>(model_); }
  const Model& model() const { return *model_; }

  bool has_principal() const { return static_cast<bool>(info_.principal); }
  const Symbol& principal() const {
    if (!info_.principal) throw ConfigError("symbol '" + name() + "' has no homogeneous principal part");
    return *info_.principal;
  }

  Complex operator()(const Vec& x, const Vec& xi) const { return model_->value(x, xi); }

  ComplexJet jet(const Vec& x, const Vec& xi, int order) const {
    if (order > max_jet_order())
      throw CapError("symbol '" + name() + "': derivative order " + std::to_string(order) +
                     " exceeds available order " + std::to_string(max_jet_order()));
    return model_->jet(x, xi, order);
  }

  SymbolDerivatives derivatives(const Vec& x, const Vec& xi, int order = 2) const {
    const int d = dim();
    ComplexJet j = jet(x, xi, order);
    SymbolDerivatives r;
    r.value = j.value();
    r.dx.resize(d);
    r.dxi.resize(d);
    for (int v = 0; v < d; ++v) {
      r.dx(v) = order >= 1 ? j.partial(v) : Complex{};
      r.dxi(v) = order >= 1 ? j.partial(d + v) : Complex{};
    }
    r.dxx = CMat::Zero(d, d);
    r.dxxi = CMat::Zero(d, d);
    r.dxixi = CMat::Zero(d, d);
    if (order >= 2)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          r.dxx(a, b) = j.partial(a, b);
          r.dxxi(a, b) = j.partial(a, d + b);
          r.dxixi(a, b) = j.partial(d + a, d + b);
        }
    return r;
  }

  Symbol with_info(Info info) const { return Symbol(model_, std::move(info)); }
  Symbol renamed(std::string name) const {
    Info i = info_;
    i.name = std::move(name);
    return Symbol(model_, std::move(i));
  }

 private:
  std::shared_ptr<const Model> model_;
  Info info_;
};

namespace symbol_models {

// F provides `template <class S> S operator()(const S* x, const S* xi) const`
// and a static constexpr bool `real`.
template <class F>
class Formula final : public Symbol::Model {
 public:
  Formula(int d, F f) : d_(d), f_(std::move(f)) {}
  int dim() const override { return d_; }

  Complex value(const Vec& x, const Vec& xi) const override {
    if constexpr (F::real) {
      return Complex(f_(x.data(), xi.data()), 0.0);
    } else {
      Complex cx[kMaxDim], cxi[kMaxDim];
      for (int i = 0; i < d_; ++i) {
        cx[i] = x(i);
        cxi[i] = xi(i);
      }
      return f_(&cx[0], &cxi[0]);
    }
  }

  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    const auto& tab = MonomialTable::get(2 * d_, order);
    if constexpr (F::real) {
      RealJet vx[kMaxDim], vxi[kMaxDim];
      for (int i = 0; i < d_; ++i) {
        vx[i] = RealJet::variable(tab, i, x(i));
        vxi[i] = RealJet::variable(tab, d_ + i, xi(i));
      }
      return ComplexJet::cast(f_(&vx[0], &vxi[0]));
    } else {
      ComplexJet vx[kMaxDim], vxi[kMaxDim];
      for (int i = 0; i < d_; ++i) {
        vx[i] = ComplexJet::variable(tab, i, x(i));
        vxi[i] = ComplexJet::variable(tab, d_ + i, xi(i));
      }
      return f_(&vx[0], &vxi[0]);
    }
  }

 private:
  int d_;
  F f_;
};

// Value-only symbol; derivatives up to order 2 by central differences.
class Sampled final : public Symbol::Model {
 public:
  using Fn = std::function<Complex(const Vec&, const Vec&)>;
  Sampled(int d, Fn f) : d_(d), f_(std::move(f)) {}
  int dim() const override { return d_; }
  int max_jet_order() const override { return 2; }
  Complex value(const Vec& x, const Vec& xi) const override { return f_(x, xi); }

  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    const int n = 2 * d_;
    const auto& tab = MonomialTable::get(n, order);
    PhaseVec z = join(x, xi);
    auto eval = [&](const PhaseVec& p) { return f_(head(p), tail(p)); };
    ComplexJet j(tab, eval(z));
    if (order == 0) return j;
    const double eps = std::numeric_limits<double>::epsilon();
    PhaseVec h1(n), h2(n);
    for (int v = 0; v < n; ++v) {
      h1(v) = std::cbrt(eps) * (1.0 + std::abs(z(v)));
      h2(v) = std::pow(eps, 0.25) * (1.0 + std::abs(z(v)));
    }
    for (int v = 0; v < n; ++v) {
      PhaseVec p = z, m = z;
      p(v) += h1(v);
      m(v) -= h1(v);
      j[tab.variable_index(v)] = (eval(p) - eval(m)) / (2.0 * h1(v));
    }
    if (order >= 2) {
      const Complex f0 = j.value();
      for (int v = 0; v < n; ++v)
        for (int w = v; w < n; ++w) {
          MultiIndex a{};
          a[static_cast<std::size_t>(v)] += 1;
          a[static_cast<std::size_t>(w)] += 1;
          Complex second;
          if (v == w) {
            PhaseVec p = z, m = z;
            p(v) += h2(v);
            m(v) -= h2(v);
            second = (eval(p) - 2.0 * f0 + eval(m)) / (h2(v) * h2(v));
          } else {
            PhaseVec pp = z, pm = z, mp = z, mm = z;
            pp(v) += h2(v); pp(w) += h2(w);
            pm(v) += h2(v); pm(w) -= h2(w);
            mp(v) -= h2(v); mp(w) += h2(w);
            mm(v) -= h2(v); mm(w) -= h2(w);
            second = (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * h2(v) * h2(w));
          }
          j[tab.index(a)] = second / multi_factorial(a, n);
        }
    }
    return j;
  }

 private:
  int d_;
  Fn f_;
};

class Sum final : public Symbol::Model {
 public:
  Sum(Symbol a, Symbol b, Complex ca, Complex cb) : a_(std::move(a)), b_(std::move(b)), ca_(ca), cb_(cb) {}
  int dim() const override { return a_.dim(); }
  int max_jet_order() const override { return std::min(a_.max_jet_order(), b_.max_jet_order()); }
  Complex value(const Vec& x, const Vec& xi) const override { return ca_ * a_(x, xi) + cb_ * b_(x, xi); }
  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    return a_.jet(x, xi, order) * ca_ + b_.jet(x, xi, order) * cb_;
  }

 private:
  Symbol a_, b_;
  Complex ca_, cb_;
};

class Product final : public Symbol::Model {
 public:
  Product(Symbol a, Symbol b) : a_(std::move(a)), b_(std::move(b)) {}
  int dim() const override { return a_.dim(); }
  int max_jet_order() const override { return std::min(a_.max_jet_order(), b_.max_jet_order()); }
  // A vanishing first factor short-circuits, so cutoffs may multiply symbols
  // that are singular where the cutoff is zero.
  Complex value(const Vec& x, const Vec& xi) const override {
    Complex va = a_(x, xi);
    return va == Complex{} ? va : va * b_(x, xi);
  }
  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    ComplexJet ja = a_.jet(x, xi, order);
    bool zero = true;
    for (int i = 0; i < ja.size() && zero; ++i) zero = ja[i] == Complex{};
    return zero ? ja : ja * b_.jet(x, xi, order);
  }

 private:
  Symbol a_, b_;
};

class Conjugate final : public Symbol::Model {
 public:
  explicit Conjugate(Symbol a) : a_(std::move(a)) {}
  int dim() const override { return a_.dim(); }
  int max_jet_order() const override { return a_.max_jet_order(); }
  Complex value(const Vec& x, const Vec& xi) const override { return std::conj(a_(x, xi)); }
  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    ComplexJet j = a_.jet(x, xi, order);
    for (int i = 0; i < j.size(); ++i) j[i] = std::conj(j[i]);
    return j;
  }

 private:
  Symbol a_;
};

// Substitute linear jets (no constant part) into a polynomial given by jet
// coefficients: result(h) = sum_mu c_mu prod_v L_v(h)^mu_v.
inline ComplexJet substitute_linear(const ComplexJet& p, const std::vector<ComplexJet>& L) {
  const auto& src = p.table();
  const auto& dst = L.front().table();
  ComplexJet out(dst, Complex{});
  const int n = src.nvars();
  for (int i = 0; i < src.size(); ++i) {
    if (p[i] == Complex{}) continue;
    ComplexJet term(dst, p[i]);
    const MultiIndex& mu = src.exponent(i);
    for (int v = 0; v < n; ++v)
      for (int k = 0; k < mu[v]; ++k) term = term * L[static_cast<std::size_t>(v)];
    out += term;
  }
  return out;
}

// a(M z + c) for a phase-space affine map z = (x, xi).
class AffinePullback final : public Symbol::Model {
 public:
  AffinePullback(Symbol a, PhaseMat M, PhaseVec c) : a_(std::move(a)), M_(std::move(M)), c_(std::move(c)) {}
  int dim() const override { return a_.dim(); }
  int max_jet_order() const override { return a_.max_jet_order(); }
  Complex value(const Vec& x, const Vec& xi) const override {
    PhaseVec z = M_ * join(x, xi) + c_;
    return a_(head(z), tail(z));
  }
  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    const int n = 2 * dim();
    PhaseVec z = M_ * join(x, xi) + c_;
    ComplexJet pj = a_.jet(head(z), tail(z), order);
    const auto& tab = MonomialTable::get(n, order);
    std::vector<ComplexJet> L;
    for (int v = 0; v < n; ++v) {
      ComplexJet l(tab, Complex{});
      if (order >= 1)
        for (int w = 0; w < n; ++w) l[tab.variable_index(w)] = M_(v, w);
      L.push_back(l);
    }
    return substitute_linear(pj, L);
  }

 private:
  Symbol a_;
  PhaseMat M_;
  PhaseVec c_;
};

}  // namespace symbol_models

template <class F>
Symbol make_formula_symbol(int d, F f, Symbol::Info info) {
  return Symbol(std::make_shared<symbol_models::Formula<F>>(d, std::move(f)), std::move(info));
}

// Wrap a value-only closure. Derivatives up to order 2 use central
// differences with step eps^(1/3)(1 + |z|) (eps^(1/4) for second order).
inline Symbol symbol_from_function(int d, double order, std::function<Complex(const Vec&, const Vec&)> f,
                                   std::string name = "closure", bool is_real = false) {
  Symbol::Info info;
  info.name = std::move(name);
  info.order = order;
  info.is_real = is_real;
  return Symbol(std::make_shared<symbol_models::Sampled>(d, std::move(f)), std::move(info));
}

inline void check_same_dim(const Symbol& a, const Symbol& b) {
  if (a.dim() != b.dim()) throw ConfigError("symbol dimension mismatch: " + a.name() + " vs " + b.name());
}

inline Symbol linear_combination(const Symbol& a, Complex ca, const Symbol& b, Complex cb) {
  check_same_dim(a, b);
  Symbol::Info info;
  info.name = "(" + a.name() + "+" + b.name() + ")";
  info.order = std::max(a.order(), b.order());
  info.is_real = a.is_real() && b.is_real() && ca.imag() == 0.0 && cb.imag() == 0.0;
  info.x_independent = a.x_independent() && b.x_independent();
  info.xi_floor = std::max(a.xi_floor(), b.xi_floor());
  return Symbol(std::make_shared<symbol_models::Sum>(a, b, ca, cb), std::move(info));
}

inline Symbol operator+(const Symbol& a, const Symbol& b) { return linear_combination(a, 1.0, b, 1.0); }
inline Symbol operator-(const Symbol& a, const Symbol& b) {
  auto s = linear_combination(a, 1.0, b, -1.0);
  return s.renamed("(" + a.name() + "-" + b.name() + ")");
}

inline Symbol operator*(const Symbol& a, const Symbol& b) {
  check_same_dim(a, b);
  Symbol::Info info;
  info.name = a.name() + "*" + b.name();
  info.order = a.order() + b.order();
  info.is_real = a.is_real() && b.is_real();
  info.x_independent = a.x_independent() && b.x_independent();
  info.xi_floor = std::max(a.xi_floor(), b.xi_floor());
  return Symbol(std::make_shared<symbol_models::Product>(a, b), std::move(info));
}

inline Symbol operator*(Complex c, const Symbol& a) {
  Symbol::Info info = a.info();
  info.name = "c*" + a.name();
  info.is_real = a.is_real() && c.imag() == 0.0;
  if (a.has_principal()) info.principal = std::make_shared<const Symbol>(c * a.principal());
  if (c == Complex{}) info.order = -std::numeric_limits<double>::infinity();
  return Symbol(std::make_shared<symbol_models::Sum>(a, a, c, Complex{}), std::move(info));
}

inline Symbol conj(const Symbol& a) {
  Symbol::Info info = a.info();
  info.name = "conj(" + a.name() + ")";
  info.principal.reset();
  return Symbol(std::make_shared<symbol_models::Conjugate>(a), std::move(info));
}

inline Symbol pullback_affine(const Symbol& a, const PhaseMat& M, const PhaseVec& c) {
  require(M.rows() == 2 * a.dim() && M.cols() == 2 * a.dim() && c.size() == 2 * a.dim(),
          "pullback: map dimension mismatch");
  Symbol::Info info = a.info();
  info.name = "pullback(" + a.name() + ")";
  info.principal.reset();
  info.x_independent = a.x_independent() && M.bottomLeftCorner(a.dim(), a.dim()).isZero();
  return Symbol(std::make_shared<symbol_models::AffinePullback>(a, M, c), std::move(info));
}

}  // namespace magfio
