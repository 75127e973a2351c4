#pragma once

#include "magfio/symbols/builtin.hpp"

#include <random>

namespace magfio {

namespace symbol_models {

// sum_{|alpha| < N} (1/alpha!) s^{|alpha|} D_x^alpha d_xi^alpha a, D = -i d.
// s = +1/2 maps Weyl to left symbols, s = -1/2 maps left to Weyl.
class QuantizationChange final : public Symbol::Model {
 public:
  QuantizationChange(Symbol a, int terms, double s) : a_(std::move(a)), terms_(terms), s_(s) {
    const int d = a_.dim();
    MultiIndex cur{};
    enumerate(d, 0, terms_ - 1, cur);
  }

  int dim() const override { return a_.dim(); }
  int max_jet_order() const override { return a_.max_jet_order() - 2 * (terms_ - 1); }

  Complex value(const Vec& x, const Vec& xi) const override { return jet(x, xi, 0).value(); }

  ComplexJet jet(const Vec& x, const Vec& xi, int order) const override {
    const int d = dim();
    ComplexJet full = a_.jet(x, xi, order + 2 * (terms_ - 1));
    const auto& tab = MonomialTable::get(2 * d, order);
    ComplexJet out(tab, Complex{});
    for (const auto& alpha : alphas_) {
      MultiIndex nu{};
      int deg = 0;
      for (int v = 0; v < d; ++v) {
        nu[static_cast<std::size_t>(v)] = alpha[v];
        nu[static_cast<std::size_t>(d + v)] = alpha[v];
        deg += alpha[v];
      }
      Complex w = std::pow(Complex(0.0, -s_), deg) / multi_factorial(alpha, d);
      out += full.shifted(nu, tab) * w;
    }
    return out;
  }

 private:
  void enumerate(int d, int var, int remaining, MultiIndex& cur) {
    if (var == d) {
      alphas_.push_back(cur);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      cur[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(k);
      enumerate(d, var + 1, remaining - k, cur);
    }
    cur[static_cast<std::size_t>(var)] = 0;
  }

  Symbol a_;
  int terms_;
  double s_;
  std::vector<MultiIndex> alphas_;
};

}  // namespace symbol_models

inline Symbol change_quantization(const Symbol& a, int terms, double s, const std::string& tag) {
  require(terms >= 1, tag + ": number of terms must be >= 1");
  if (a.x_independent() || terms == 1) return a;
  const int needed = 2 * (terms - 1);
  if (a.max_jet_order() < needed)
    throw CapError(tag + ": needs derivative order " + std::to_string(needed) + " but '" + a.name() +
                   "' provides " + std::to_string(a.max_jet_order()));
  Symbol::Info info = a.info();
  info.name = tag + "(" + a.name() + ")";
  info.is_real = false;
  return Symbol(std::make_shared<symbol_models::QuantizationChange>(a, terms, s), std::move(info));
}

// Left symbol of the Weyl operator with symbol a, truncated to N terms.
inline Symbol weyl_to_left(const Symbol& a, int terms) { return change_quantization(a, terms, 0.5, "weyl_to_left"); }

// Weyl symbol of the left-quantized operator with symbol b, truncated to N terms.
inline Symbol left_to_weyl(const Symbol& b, int terms) { return change_quantization(b, terms, -0.5, "left_to_weyl"); }

struct PhasePoint {
  Vec x;
  Vec xi;
};

// Deterministic phase-space samples: x uniform in [-x_box, x_box]^d, |xi|
// spread geometrically over [0, xi_max].
inline std::vector<PhasePoint> phase_samples(int d, int count, double x_box, double xi_max,
                                             std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-x_box, x_box);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::vector<PhasePoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    PhasePoint p{Vec(d), Vec(d)};
    for (int k = 0; k < d; ++k) p.x(k) = ux(rng);
    Vec dir(d);
    for (int k = 0; k < d; ++k) dir(k) = nd(rng);
    if (dir.norm() == 0.0) dir(0) = 1.0;
    dir.normalize();
    double r = (i % 8 == 0) ? 0.0 : std::expm1(ur(rng) * std::log1p(xi_max));
    p.xi = r * dir;
    out.push_back(std::move(p));
  }
  return out;
}

inline double japanese_bracket(const Vec& xi) { return std::sqrt(1.0 + xi.squaredNorm()); }

// sup over samples of |d_x^beta d_xi^alpha a| <xi>^{-(m - |alpha|)}.
inline double seminorm_estimate(const Symbol& a, double m, const MultiIndex& alpha, const MultiIndex& beta,
                                const std::vector<PhasePoint>& samples) {
  const int d = a.dim();
  MultiIndex nu{};
  int order = 0, adeg = 0;
  for (int v = 0; v < d; ++v) {
    nu[static_cast<std::size_t>(v)] = beta[v];
    nu[static_cast<std::size_t>(d + v)] = alpha[v];
    order += alpha[v] + beta[v];
    adeg += alpha[v];
  }
  double sup = 0.0;
  for (const auto& p : samples) {
    Complex v = a.jet(p.x, p.xi, order).derivative(nu);
    sup = std::max(sup, std::abs(v) * std::pow(japanese_bracket(p.xi), -(m - adeg)));
  }
  return sup;
}

struct EllipticityReport {
  bool elliptic = false;
  double constant = 0.0;  // inf over samples of |a| <xi>^{-m} for |xi| >= R
};

inline EllipticityReport is_elliptic_sample(const Symbol& a, double m, double R,
                                            const std::vector<PhasePoint>& samples, double threshold = 1e-10) {
  EllipticityReport r;
  r.constant = std::numeric_limits<double>::infinity();
  for (const auto& p : samples) {
    if (p.xi.norm() < R) continue;
    r.constant = std::min(r.constant, std::abs(a(p.x, p.xi)) * std::pow(japanese_bracket(p.xi), -m));
  }
  if (!std::isfinite(r.constant)) r.constant = 0.0;
  r.elliptic = r.constant > threshold;
  return r;
}

// a_0 + sum_{j>=1} chi_{t_j} a_j with an explicit radius schedule (t_0 unused
// unless positive, in which case a_0 is cut off as well).
inline Symbol asymptotic_sum(const std::vector<Symbol>& terms, const std::vector<double>& radii) {
  require(!terms.empty(), "asymptotic_sum: empty sequence");
  require(radii.size() == terms.size(), "asymptotic_sum: one radius per term required");
  Symbol out = radii[0] > 0.0 ? cutoff(terms[0], radii[0]) : terms[0];
  for (std::size_t j = 1; j < terms.size(); ++j) {
    require(radii[j] > 0.0 && radii[j] >= radii[j - 1], "asymptotic_sum: radii must be positive and non-decreasing");
    out = out + cutoff(terms[j], radii[j]);
  }
  auto info = out.info();
  info.name = "asum(" + terms.front().name() + ",...)";
  info.order = terms.front().order();
  return out.with_info(info);
}

// Borel-type sum a_0 + sum_{j>=1} chi_{R_j} a_j with radii growing fast
// enough that the tail is dominated term by term.
inline Symbol asymptotic_sum(const std::vector<Symbol>& terms, const std::vector<PhasePoint>& samples) {
  require(!terms.empty(), "asymptotic_sum: empty sequence");
  Symbol out = terms.front();
  double radius = 1.0;
  for (std::size_t j = 1; j < terms.size(); ++j) {
    const Symbol& aj = terms[j];
    double c = seminorm_estimate(aj, aj.order(), MultiIndex{}, MultiIndex{}, samples);
    radius = std::max(radius * 2.0, std::ldexp(1.0, static_cast<int>(j)) * std::max(1.0, c));
    out = out + cutoff(aj, radius);
  }
  auto info = out.info();
  info.name = "asum(" + terms.front().name() + ",...)";
  info.order = terms.front().order();
  return out.with_info(info);
}

}  // namespace magfio
