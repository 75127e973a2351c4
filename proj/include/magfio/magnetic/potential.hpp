#pragma once

#include "magfio/core/quadrature.hpp"
#include "magfio/magnetic/field.hpp"

#include <cmath>

namespace magfio {

// Smooth real gauge function phi used for A -> A + grad(phi).
class GaugeFunction {
 public:
  class Model {
   public:
    virtual ~Model() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual RealJet jet(const Vec& x, int order) const = 0;
    virtual double value(const Vec& x) const { return jet(x, 0).value(); }
    virtual double length_scale() const { return std::numeric_limits<double>::infinity(); }
  };

  GaugeFunction() = default;
  explicit GaugeFunction(std::shared_ptr<const Model> m) : model_(std::move(m)) {}

  int dim() const { return model_->dim(); }
  std::string name() const { return model_->name(); }
  double length_scale() const { return model_->length_scale(); }
  double operator()(const Vec& x) const { return model_->value(x); }
  RealJet jet(const Vec& x, int order) const { return model_->jet(x, order); }
  Vec gradient(const Vec& x) const {
    RealJet j = jet(x, 1);
    Vec g(dim());
    for (int v = 0; v < dim(); ++v) g(v) = j.partial(v);
    return g;
  }

 private:
  std::shared_ptr<const Model> model_;
};

namespace gauges {

template <class F>
class Formula final : public GaugeFunction::Model {
 public:
  Formula(int d, std::string name, F f, double scale)
      : d_(d), name_(std::move(name)), f_(std::move(f)), scale_(scale) {}
  int dim() const override { return d_; }
  std::string name() const override { return name_; }
  double length_scale() const override { return scale_; }
  double value(const Vec& x) const override { return f_(x.data()); }
  RealJet jet(const Vec& x, int order) const override {
    const auto& tab = MonomialTable::get(d_, order);
    RealJet v[kMaxDim];
    for (int i = 0; i < d_; ++i) v[i] = RealJet::variable(tab, i, x(i));
    return f_(&v[0]);
  }

 private:
  int d_;
  std::string name_;
  F f_;
  double scale_;
};

template <class F>
GaugeFunction make(int d, std::string name, F f, double scale = std::numeric_limits<double>::infinity()) {
  return GaugeFunction(std::make_shared<Formula<F>>(d, std::move(name), std::move(f), scale));
}

}  // namespace gauges

inline GaugeFunction zero_gauge(int d) {
  return gauges::make(d, "zero", [](const auto* x) { return x[0] * 0.0; });
}

// phi(x) = c x_1 x_2.
inline GaugeFunction bilinear_gauge(int d, double c) {
  require(d >= 2, "bilinear gauge needs d >= 2");
  return gauges::make(d, "bilinear", [c](const auto* x) { return x[0] * x[1] * c; });
}

// phi(x) = amp * exp(-|x|^2 / (2 w^2)).
inline GaugeFunction gaussian_gauge(int d, double amp, double width) {
  require(width > 0.0, "gaussian gauge: width must be positive");
  return gauges::make(d, "gaussian", [d, amp, width](const auto* x) {
    using std::exp;
    auto r2 = x[0] * x[0];
    for (int i = 1; i < d; ++i) r2 = r2 + x[i] * x[i];
    return exp(r2 * (-0.5 / (width * width))) * amp;
  }, width);
}

inline std::vector<std::string> gauge_names() { return {"zero", "bilinear", "gaussian"}; }

inline GaugeFunction make_gauge(const NamedSpec& spec, int d) {
  if (spec.name == "zero") {
    spec.check_keys({});
    return zero_gauge(d);
  }
  if (spec.name == "bilinear") {
    spec.check_keys({"c"});
    return bilinear_gauge(d, spec.get("c", 0.25));
  }
  if (spec.name == "gaussian") {
    spec.check_keys({"amp", "width"});
    return gaussian_gauge(d, spec.get("amp", 1.0), spec.get("width", 1.0));
  }
  throw ConfigError("unknown gauge function '" + spec.name + "'");
}

class VectorPotential {
 public:
  class Model {
   public:
    virtual ~Model() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual bool is_zero() const { return false; }
    virtual Vec value(const Vec& x) const = 0;
    virtual std::vector<RealJet> jets(const Vec& x, int order) const = 0;
    virtual double length_scale() const { return std::numeric_limits<double>::infinity(); }
  };

  VectorPotential() = default;
  explicit VectorPotential(std::shared_ptr<const Model> m) : model_(std::move(m)) {}

  int dim() const { return model_->dim(); }
  std::string name() const { return model_->name(); }
  bool is_zero() const { return model_->is_zero(); }
  double length_scale() const { return model_->length_scale(); }
  Vec operator()(const Vec& x) const { return model_->value(x); }
  std::vector<RealJet> jets(const Vec& x, int order) const { return model_->jets(x, order); }

  // B_jk = d_j A_k - d_k A_j evaluated from first-order jets.
  Mat curl(const Vec& x) const {
    const int d = dim();
    auto j = jets(x, 1);
    Mat B(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        B(a, b) = j[static_cast<std::size_t>(b)].partial(a) - j[static_cast<std::size_t>(a)].partial(b);
    return B;
  }

 private:
  std::shared_ptr<const Model> model_;
};

namespace potentials {

class Zero final : public VectorPotential::Model {
 public:
  explicit Zero(int d) : d_(d) {}
  int dim() const override { return d_; }
  std::string name() const override { return "zero"; }
  bool is_zero() const override { return true; }
  Vec value(const Vec&) const override { return Vec::Zero(d_); }
  std::vector<RealJet> jets(const Vec&, int order) const override {
    return std::vector<RealJet>(static_cast<std::size_t>(d_), RealJet(MonomialTable::get(d_, order), 0.0));
  }

 private:
  int d_;
};

// A_j(x) = -sum_k int_0^1 B_jk(s x) s x_k ds.
class Transverse final : public VectorPotential::Model {
 public:
  explicit Transverse(MagneticField B, int nodes = 16) : B_(std::move(B)), rule_(gauss_legendre(nodes)) {}
  int dim() const override { return B_.dim(); }
  std::string name() const override { return "transverse(" + B_.name() + ")"; }
  bool is_zero() const override { return B_.is_zero(); }
  double length_scale() const override { return B_.length_scale(); }

  Vec value(const Vec& x) const override {
    const int d = dim();
    if (B_.is_zero()) return Vec::Zero(d);
    if (B_.is_constant()) return -0.5 * (B_.matrix(x) * x);
    if (auto closed = B_.model().transverse_potential(x)) return *closed;
    Vec A = Vec::Zero(d);
    for_each_node(x, [&](double s, double w) { A -= (w * s) * (B_.matrix(s * x) * x); });
    return A;
  }

  std::vector<RealJet> jets(const Vec& x, int order) const override {
    const int d = dim();
    const auto& tab = MonomialTable::get(d, order);
    std::vector<RealJet> A(static_cast<std::size_t>(d), RealJet(tab, 0.0));
    std::vector<RealJet> xv;
    for (int i = 0; i < d; ++i) xv.push_back(RealJet::variable(tab, i, x(i)));
    if (B_.is_zero()) return A;
    for_each_node(x, [&](double s, double weight) {
      auto bj = B_.component_jets(s * x, order);
      // Chain rule for x -> s x: coefficient of degree n scales by s^n.
      for (auto& jet : bj)
        for (int deg = 1; deg <= order; ++deg) {
          double f = std::pow(s, deg);
          for (int i = tab.degree_begin(deg); i < tab.degree_end(deg); ++i) jet[i] *= f;
        }
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          if (j == k) continue;
          const RealJet& bjk = j < k ? bj[static_cast<std::size_t>(pair_index(d, j, k))]
                                     : bj[static_cast<std::size_t>(pair_index(d, k, j))];
          double sign = j < k ? 1.0 : -1.0;
          A[static_cast<std::size_t>(j)] -= bjk * xv[static_cast<std::size_t>(k)] * (sign * weight * s);
        }
    });
    return A;
  }

  const MagneticField& field() const { return B_; }

 private:
  // Composite Gauss-Legendre nodes on s in [0, 1] with panels no longer than
  // the field scale along the ray to x.
  template <class Fn>
  void for_each_node(const Vec& x, Fn&& fn) const {
    const int panels = panel_count(x.norm(), B_.length_scale());
    const double len = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
      for (std::size_t q = 0; q < rule_.nodes.size(); ++q) fn((p + rule_.nodes[q]) * len, rule_.weights[q] * len);
  }

  MagneticField B_;
  const QuadratureRule& rule_;
};

class Shifted final : public VectorPotential::Model {
 public:
  Shifted(VectorPotential A, GaugeFunction phi) : A_(std::move(A)), phi_(std::move(phi)) {
    require(A_.dim() == phi_.dim(), "gauge_shift: dimension mismatch");
  }
  int dim() const override { return A_.dim(); }
  std::string name() const override { return A_.name() + "+grad(" + phi_.name() + ")"; }
  double length_scale() const override { return std::min(A_.length_scale(), phi_.length_scale()); }
  Vec value(const Vec& x) const override { return A_(x) + phi_.gradient(x); }
  std::vector<RealJet> jets(const Vec& x, int order) const override {
    auto a = A_.jets(x, order);
    RealJet p = phi_.jet(x, order + 1);
    const auto& tab = MonomialTable::get(dim(), order);
    for (int v = 0; v < dim(); ++v) {
      MultiIndex e{};
      e[static_cast<std::size_t>(v)] = 1;
      a[static_cast<std::size_t>(v)] += p.shifted(e, tab);
    }
    return a;
  }

 private:
  VectorPotential A_;
  GaugeFunction phi_;
};

}  // namespace potentials

inline VectorPotential zero_potential(int d) {
  return VectorPotential(std::make_shared<potentials::Zero>(d));
}

inline VectorPotential transverse_gauge(const MagneticField& B) {
  return VectorPotential(std::make_shared<potentials::Transverse>(B));
}

inline VectorPotential gauge_shift(const VectorPotential& A, const GaugeFunction& phi) {
  return VectorPotential(std::make_shared<potentials::Shifted>(A, phi));
}

}  // namespace magfio
