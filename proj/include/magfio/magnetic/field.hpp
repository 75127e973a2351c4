#pragma once

#include "magfio/core/spec.hpp"
#include "magfio/core/taylor.hpp"
#include "magfio/core/types.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace magfio {

// Index of the pair (j, k), j < k, in the list of independent components.
inline int pair_index(int d, int j, int k) {
  int idx = 0;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      if (a == j && b == k) return idx;
      ++idx;
    }
  return -1;
}

inline int pair_count(int d) { return d * (d - 1) / 2; }

// Number of equal panels so that none is longer than scale.
inline int panel_count(double length, double scale) {
  if (!(length > scale)) return 1;
  return static_cast<int>(std::ceil(length / scale));
}

// Closed antisymmetric 2-form B_jk(x) with bounded derivatives.
class MagneticField {
 public:
  class Model {
   public:
    virtual ~Model() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual bool is_zero() const { return false; }
    virtual bool is_constant() const { return false; }
    // Upper-triangle entries B_jk, j < k, in pair order.
    virtual void components(const Vec& x, double* out) const = 0;
    // Jets of the upper-triangle entries in the d position variables.
    virtual std::vector<RealJet> component_jets(const Vec& x, int order) const = 0;
    // Distance over which the field varies appreciably; sets quadrature panel sizes.
    virtual double length_scale() const { return std::numeric_limits<double>::infinity(); }
    // Closed-form transverse-gauge potential, when the model has one.
    virtual std::optional<Vec> transverse_potential(const Vec&) const { return std::nullopt; }
  };

  MagneticField() = default;
  explicit MagneticField(std::shared_ptr<const Model> m) : model_(std::move(m)) {}

  int dim() const { return model_->dim(); }
  std::string name() const { return model_->name(); }
  bool is_zero() const { return model_->is_zero(); }
  bool is_constant() const { return model_->is_constant(); }
  double length_scale() const { return model_->length_scale(); }

  Mat matrix(const Vec& x) const {
    const int d = dim();
    double c[kMaxDim * kMaxDim];
    model_->components(x, c);
    Mat B = Mat::Zero(d, d);
    int idx = 0;
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) {
        B(j, k) = c[idx];
        B(k, j) = -c[idx];
        ++idx;
      }
    return B;
  }

  std::vector<RealJet> component_jets(const Vec& x, int order) const {
    return model_->component_jets(x, order);
  }

  const Model& model() const { return *model_; }

 private:
  std::shared_ptr<const Model> model_;
};

namespace fields {

class Zero final : public MagneticField::Model {
 public:
  explicit Zero(int d) : d_(d) {}
  int dim() const override { return d_; }
  std::string name() const override { return "zero"; }
  bool is_zero() const override { return true; }
  bool is_constant() const override { return true; }
  void components(const Vec&, double* out) const override {
    for (int i = 0; i < pair_count(d_); ++i) out[i] = 0.0;
  }
  std::vector<RealJet> component_jets(const Vec&, int order) const override {
    const auto& tab = MonomialTable::get(d_, order);
    return std::vector<RealJet>(static_cast<std::size_t>(pair_count(d_)), RealJet(tab, 0.0));
  }

 private:
  int d_;
};

// Constant field with B_12 = b (other components zero).
class Constant final : public MagneticField::Model {
 public:
  Constant(int d, double b) : d_(d), b_(b) {}
  int dim() const override { return d_; }
  std::string name() const override { return "constant"; }
  bool is_constant() const override { return true; }
  void components(const Vec&, double* out) const override {
    for (int i = 0; i < pair_count(d_); ++i) out[i] = 0.0;
    out[0] = b_;
  }
  std::vector<RealJet> component_jets(const Vec&, int order) const override {
    const auto& tab = MonomialTable::get(d_, order);
    std::vector<RealJet> r(static_cast<std::size_t>(pair_count(d_)), RealJet(tab, 0.0));
    r[0] = RealJet(tab, b_);
    return r;
  }

 private:
  int d_;
  double b_;
};

// Localized field B_12 = b0 / (1 + |x / w|^2) in the plane.
class Bump final : public MagneticField::Model {
 public:
  Bump(double b0, double width) : b0_(b0), w_(width) {
    require(width > 0.0, "bump field: width must be positive");
  }
  int dim() const override { return 2; }
  std::string name() const override { return "bump"; }
  double length_scale() const override { return w_; }
  // A = b0 g(u) (-x2, x1) with u = |x|^2 / w^2 and g(u) = log(1 + u) / (2u).
  std::optional<Vec> transverse_potential(const Vec& x) const override {
    const double u = (x(0) * x(0) + x(1) * x(1)) / (w_ * w_);
    const double g = u < 1e-8 ? 0.5 - 0.25 * u : std::log1p(u) / (2.0 * u);
    return make_vec({-b0_ * g * x(1), b0_ * g * x(0)});
  }
  void components(const Vec& x, double* out) const override { out[0] = eval(x(0), x(1)); }
  std::vector<RealJet> component_jets(const Vec& x, int order) const override {
    const auto& tab = MonomialTable::get(2, order);
    return {eval(RealJet::variable(tab, 0, x(0)), RealJet::variable(tab, 1, x(1)))};
  }

  template <class S>
  S eval(const S& x1, const S& x2) const {
    const double iw2 = 1.0 / (w_ * w_);
    return b0_ / (1.0 + (x1 * x1 + x2 * x2) * iw2);
  }

 private:
  double b0_, w_;
};

}  // namespace fields

inline MagneticField zero_field(int d) { return MagneticField(std::make_shared<fields::Zero>(d)); }

inline MagneticField constant_field(int d, double b) {
  require(d >= 2, "constant field needs d >= 2");
  return MagneticField(std::make_shared<fields::Constant>(d, b));
}

inline MagneticField bump_field(double b0, double width) {
  return MagneticField(std::make_shared<fields::Bump>(b0, width));
}

inline std::vector<std::string> field_names() { return {"zero", "constant", "bump"}; }

inline MagneticField make_field(const NamedSpec& spec, int d) {
  require(d >= 1 && d <= kMaxDim, "field: dimension must be 1..3");
  if (spec.name == "zero") {
    spec.check_keys({});
    return zero_field(d);
  }
  if (d == 1) throw ConfigError("field '" + spec.name + "': d = 1 only supports the zero field");
  if (spec.name == "constant") {
    spec.check_keys({"b"});
    return constant_field(d, spec.get("b", 1.0));
  }
  if (spec.name == "bump") {
    spec.check_keys({"b0", "width"});
    if (d != 2) throw ConfigError("field 'bump' is only defined for d = 2");
    return bump_field(spec.get("b0", 0.5), spec.get("width", 2.0));
  }
  throw ConfigError("unknown field '" + spec.name + "'");
}

// Sampled defect of dB = 0 (only meaningful for d >= 3).
inline double closedness_defect(const MagneticField& B, const std::vector<Vec>& samples) {
  const int d = B.dim();
  if (d < 3) return 0.0;
  double worst = 0.0;
  for (const auto& x : samples) {
    auto jets = B.component_jets(x, 1);
    auto comp = [&](int j, int k, int v) {
      if (j == k) return 0.0;
      double s = j < k ? 1.0 : -1.0;
      int p = j < k ? pair_index(d, j, k) : pair_index(d, k, j);
      return s * jets[static_cast<std::size_t>(p)].partial(v);
    };
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        for (int k = j + 1; k < d; ++k)
          worst = std::max(worst, std::abs(comp(j, k, i) + comp(k, i, j) + comp(i, j, k)));
  }
  return worst;
}

}  // namespace magfio
