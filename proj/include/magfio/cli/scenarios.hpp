#pragma once

#include "magfio/cli/report.hpp"
#include "magfio/evolution/evolution.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace magfio::cli {

// A pinned bound; config overrides may only move it in the stricter direction.
struct Tolerance {
  double value = 0.0;
  Relation relation = Relation::AtMost;
};

class Run;

struct Scenario {
  std::string name;
  int criterion = 0;
  std::string summary;
  double budget_s = 0.0;  // wall-clock budget, checked as part of the criterion
  ExperimentConfig defaults;
  std::map<std::string, Tolerance> tolerances;
  std::function<void(Run&)> body;
};

// State of one scenario execution: the effective config, the report being
// filled and the output directory.
class Run {
 public:
  Run(const Scenario& sc, ExperimentConfig cfg) : sc_(sc), cfg_(std::move(cfg)) {
    report.scenario = sc.name;
    report.criterion = sc.criterion;
    report.inputs = to_json(cfg_);
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  std::filesystem::path out(const std::string& file) const { return std::filesystem::path(cfg_.output_dir) / file; }

  Tolerance tolerance(const std::string& key) const {
    Tolerance t = sc_.tolerances.at(key);
    auto it = cfg_.tolerances.find(key);
    if (it != cfg_.tolerances.end()) t.value = it->second;
    return t;
  }

  void check(const std::string& name, double value, const std::string& tol_key) {
    Tolerance t = tolerance(tol_key);
    check(name, value, t.value, t.relation);
  }

  void check(const std::string& name, double value, double bound, Relation rel) {
    Check c;
    c.name = name;
    c.value = value;
    c.bound = bound;
    c.relation = rel;
    // NaN fails either way.
    c.pass = rel == Relation::AtMost ? value <= bound : value >= bound;
    report.checks.push_back(c);
  }

  void table(const std::string& file, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
    io::write_table_csv(out(file), header, rows);
    report.artifacts.push_back(file);
  }

  void text_table(const std::string& file, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
    io::write_text_csv(out(file), header, rows);
    report.artifacts.push_back(file);
  }

  RunReport report;

 private:
  const Scenario& sc_;
  ExperimentConfig cfg_;
};

namespace scenarios {

inline Vec axis_vec(int d, double v) {
  Vec r = Vec::Zero(d);
  r(0) = v;
  return r;
}

inline ConfigError bad(const std::string& path, const std::string& what) { return ConfigReader::error(path, what); }

inline void require_times(const ExperimentConfig& c, std::size_t at_least = 1) {
  if (c.times.size() < at_least)
    throw bad("times", "needs at least " + std::to_string(at_least) + " value(s)");
}

inline void require_dim(const ExperimentConfig& c, int d) {
  if (c.dim != d) throw bad("dim", "this scenario needs dim = " + std::to_string(d));
}

inline void require_operands(const ExperimentConfig& c, std::size_t n) {
  if (c.operands.size() != n) throw bad("operands", "this scenario needs exactly " + std::to_string(n) + " symbol(s)");
}

inline double relative(const DenseVector& a, const DenseVector& b) { return (a - b).norm() / b.norm(); }

inline std::vector<double> dyadic(double first, int count) {
  std::vector<double> r;
  for (int i = 0; i < count; ++i) r.push_back(first * std::pow(2.0, i));
  return r;
}

// U and |det d2U/dx deta| on the grid in one sweep.
inline std::pair<PhaseSamples, SymbolSamples> phase_and_det(const Grid& g, const Eikonal& eik, double t) {
  const long n = g.size();
  PhaseSamples U(n, n);
  SymbolSamples det(n, n);
  eik.for_each_point(t, g.points(), g.freqs(), [&](std::size_t i, std::size_t k, const EikonalPoint& p) {
    U(static_cast<long>(i), static_cast<long>(k)) = p.U;
    det(static_cast<long>(i), static_cast<long>(k)) = std::abs(p.hess_xeta.determinant());
  });
  return {std::move(U), std::move(det)};
}

// ---- 1: exact free propagator -------------------------------------------

inline void free_propagator(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  MagneticField B = c.magnetic_field();
  if (!B.is_zero()) throw bad("field", "the FFT-multiplier oracle needs the zero field");
  Symbol a = c.hamiltonian();
  if (!a.x_independent()) throw bad("symbol", "the FFT-multiplier oracle needs an x-independent symbol");
  SetupOptions so;
  so.rho = c.option("rho");
  auto s = make_transport_setup(a, B, zero_potential(c.dim), so);
  const Grid g = c.grid();
  Quantizer q(g, zero_potential(c.dim));
  WaveFunction u = wave_packet(g, axis_vec(c.dim, c.option("packet_x")), axis_vec(c.dim, c.option("packet_xi")),
                               c.option("packet_sigma"));
  const Vec origin = Vec::Zero(c.dim);
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (double t : c.times) {
    PropagatorOptions po;
    po.assemble = false;
    auto pb = fio_propagator(s, t, q, po);
    WaveFunction v = apply_propagator(pb, q, u);
    WaveFunction w = fourier_multiplier(g, [&](const Vec& xi) { return std::polar(1.0, -t * a(origin, xi).real()); }, u);
    const double err = relative(v.values, w.values);
    rows.push_back({t, err});
    worst = std::max(worst, err);
  }
  r.table("free_propagator.csv", {"t", "relative_error"}, rows);
  r.report.measured["max_relative_error"] = worst;
  r.check("max_relative_error", worst, "error");
}

// ---- 2: flow invariants -------------------------------------------------

inline void flow_invariants(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  Symbol a = c.hamiltonian();
  const int samples = c.int_option("samples");
  const int steps = c.int_option("steps");
  const int diag = c.int_option("diagnostic_steps");
  if (samples < 1) throw bad("options.samples", "must be positive");
  if (steps < 2 || steps % 2 != 0) throw bad("options.steps", "must be even and >= 2");
  if (diag < 2 || diag % 2 != 0) throw bad("options.diagnostic_steps", "must be even and >= 2");
  const double t = c.times.front();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> ux(-c.option("x_box"), c.option("x_box"));
  std::uniform_real_distribution<double> ue(-c.option("xi_box"), c.option("xi_box"));
  std::vector<PhaseVec> Ys;
  for (int i = 0; i < samples; ++i) {
    Vec x(c.dim), xi(c.dim);
    for (int k = 0; k < c.dim; ++k) x(k) = ux(rng);
    for (int k = 0; k < c.dim; ++k) xi(k) = ue(rng);
    Ys.push_back(join(x, xi));
  }
  struct Defects {
    double energy = 0.0, symplectic = 0.0;
  };
  auto measure = [&](const PhaseVec& Y, int n) {
    FlowOptions fo;
    fo.steps = n;
    auto tr = hamiltonian_flow(a, Y, t, fo);
    return Defects{energy_defect(a, tr), symplectic_defect(tr)};
  };
  std::vector<std::vector<double>> rows;
  Defects full, half, dfull, dhalf;
  for (int i = 0; i < samples; ++i) {
    const PhaseVec& Y = Ys[static_cast<std::size_t>(i)];
    Defects f = measure(Y, steps), h = measure(Y, steps / 2);
    Defects df = measure(Y, diag), dh = measure(Y, diag / 2);
    full = {std::max(full.energy, f.energy), std::max(full.symplectic, f.symplectic)};
    half = {std::max(half.energy, h.energy), std::max(half.symplectic, h.symplectic)};
    dfull = {std::max(dfull.energy, df.energy), std::max(dfull.symplectic, df.symplectic)};
    dhalf = {std::max(dhalf.energy, dh.energy), std::max(dhalf.symplectic, dh.symplectic)};
    std::vector<double> row{static_cast<double>(i)};
    for (int k = 0; k < Y.size(); ++k) row.push_back(Y(k));
    row.insert(row.end(), {f.energy, f.symplectic, h.energy, h.symplectic});
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{"sample"};
  for (int k = 0; k < c.dim; ++k) header.push_back("y" + std::to_string(k + 1));
  for (int k = 0; k < c.dim; ++k) header.push_back("eta" + std::to_string(k + 1));
  header.insert(header.end(), {"energy_defect", "symplectic_defect", "energy_defect_half", "symplectic_defect_half"});
  r.table("flow_invariants.csv", header, rows);
  const double er = half.energy / full.energy, sr = half.symplectic / full.symplectic;
  auto& m = r.report.measured;
  m["energy_defect"] = full.energy;
  m["symplectic_defect"] = full.symplectic;
  m["energy_ratio"] = er;
  m["symplectic_ratio"] = sr;
  m["diagnostic_steps"] = diag;
  m["diagnostic_energy_ratio"] = dhalf.energy / dfull.energy;
  m["diagnostic_symplectic_ratio"] = dhalf.symplectic / dfull.symplectic;
  r.check("energy_defect", full.energy, "energy");
  r.check("symplectic_defect", full.symplectic, "symplectic");
  r.check("energy_ratio_low", er, "ratio_min");
  r.check("energy_ratio_high", er, "ratio_max");
  r.check("symplectic_ratio_low", sr, "ratio_min");
  r.check("symplectic_ratio_high", sr, "ratio_max");
}

// ---- 3: eikonal -----------------------------------------------------------

inline void eikonal_check(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  const double t = c.times.front();
  const int nx = c.int_option("x_points");
  const int ne = c.int_option("directions");
  if (nx < 2) throw bad("options.x_points", "must be >= 2");
  if (ne < 1) throw bad("options.directions", "must be positive");
  const double box = c.option("x_box"), R = c.option("eta_radius");
  EikonalOptions eo;
  eo.steps_per_unit = c.int_option("steps_per_unit");
  Eikonal eik(c.hamiltonian(), eo);
  std::vector<Vec> xs, etas;
  const int total = c.dim == 1 ? nx : nx * nx;
  for (int i = 0; i < total; ++i) {
    Vec x(c.dim);
    x(0) = -box + 2.0 * box * (i % nx) / (nx - 1);
    if (c.dim == 2) x(1) = -box + 2.0 * box * (i / nx) / (nx - 1);
    xs.push_back(x);
  }
  for (int k = 0; k < ne; ++k) {
    if (c.dim == 1) {
      etas.push_back(make_vec({(k % 2 ? -1.0 : 1.0) * R * (1.0 + static_cast<double>(k / 2) / ne)}));
    } else {
      const double th = 2.0 * kPi * k / ne;
      etas.push_back(make_vec({R * std::cos(th), R * std::sin(th)}));
    }
  }
  const long n = static_cast<long>(xs.size() * etas.size());
  std::vector<double> U(static_cast<std::size_t>(n)), hj(U.size()), id(U.size());
  const double dt = c.option("dt"), fd = c.option("fd_step");
#pragma omp parallel for schedule(dynamic, 1)
  for (long p = 0; p < n; ++p) {
    const Vec& x = xs[static_cast<std::size_t>(p) / etas.size()];
    const Vec& eta = etas[static_cast<std::size_t>(p) % etas.size()];
    U[static_cast<std::size_t>(p)] = eik.U(t, x, eta);
    hj[static_cast<std::size_t>(p)] = std::abs(eik.hj_residual(t, x, eta, dt));
    id[static_cast<std::size_t>(p)] = identity_defect(eik, t, x, eta, fd).worst();
  }
  std::vector<std::vector<double>> rows;
  for (long p = 0; p < n; ++p) {
    const Vec& x = xs[static_cast<std::size_t>(p) / etas.size()];
    const Vec& eta = etas[static_cast<std::size_t>(p) % etas.size()];
    std::vector<double> row;
    for (int k = 0; k < c.dim; ++k) row.push_back(x(k));
    for (int k = 0; k < c.dim; ++k) row.push_back(eta(k));
    row.insert(row.end(), {U[static_cast<std::size_t>(p)], hj[static_cast<std::size_t>(p)], id[static_cast<std::size_t>(p)]});
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header;
  for (int k = 0; k < c.dim; ++k) header.push_back("x" + std::to_string(k + 1));
  for (int k = 0; k < c.dim; ++k) header.push_back("eta" + std::to_string(k + 1));
  header.insert(header.end(), {"U", "hj_residual", "identity_defect"});
  r.table("eikonal.csv", header, rows);
  const double hj_max = *std::max_element(hj.begin(), hj.end());
  const double id_max = *std::max_element(id.begin(), id.end());
  r.report.measured["points"] = n;
  r.report.measured["hj_residual"] = hj_max;
  r.report.measured["identity_defect"] = id_max;
  r.check("hj_residual", hj_max, "hj");
  r.check("identity_defect", id_max, "identity");
}

// ---- 4: gauge covariance --------------------------------------------------

inline void gauge_check(Run& r) {
  const auto& c = r.cfg();
  const Grid g = c.grid();
  g.require_dense();
  VectorPotential A = c.potential();
  GaugeFunction phi = c.gauge_function();
  Quantizer q(g, A), qs(g, gauge_shift(A, phi));
  Symbol a = c.hamiltonian();
  Vec xi0 = Vec::Constant(c.dim, c.option("packet_xi"));
  std::vector<std::pair<std::string, WaveFunction>> inputs{
      {"packet", wave_packet(g, Vec::Zero(c.dim), xi0, c.option("packet_sigma"))},
      {"random", WaveFunction(g, [&] {
         std::mt19937_64 rng(c.seed);
         std::normal_distribution<double> nd;
         DenseVector v(g.size());
         for (long i = 0; i < v.size(); ++i) v(i) = Complex(nd(rng), nd(rng));
         return v;
       }())}};
  std::vector<std::vector<std::string>> rows;
  double worst = 0.0;
  for (const auto& [name, u] : inputs) {
    for (const std::string quant : {"weyl", "left"}) {
      auto apply = [&](const Quantizer& qq, const WaveFunction& v) {
        return quant == "weyl" ? psido_apply_weyl(qq, a, v).u : psido_apply_left(qq, a, v).u;
      };
      WaveFunction lhs = apply(qs, u);
      WaveFunction rhs = multiply_phase(apply(q, multiply_phase(u, phi, -1.0)), phi, 1.0);
      const double err = relative(lhs.values, rhs.values);
      worst = std::max(worst, err);
      rows.push_back({name, quant, io::fmt(err)});
    }
  }
  r.text_table("gauge_check.csv", {"input", "quantization", "relative_discrepancy"}, rows);
  r.report.measured["max_relative_discrepancy"] = worst;
  r.check("max_relative_discrepancy", worst, "discrepancy");
}

// ---- 5: composition orders -----------------------------------------------

inline void composition(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  require_operands(c, 2);
  const Grid g = c.grid();
  g.require_dense();
  const double t = c.times.front();
  Quantizer q(g, c.potential());
  EikonalOptions eo;
  eo.steps_per_unit = c.int_option("steps_per_unit");
  Eikonal eik(c.hamiltonian(), eo);
  PhaseFunction U = PhaseFunction::from_eikonal(eik, t);
  PhaseSamples Us = eikonal_phase(g, eik, t);
  Symbol a = c.make_symbol(c.operands[0]), b = c.make_symbol(c.operands[1]);
  const Vec xi0 = axis_vec(c.dim, c.option("xi0"));
  const auto lambdas = dyadic(c.option("lambda0"), c.int_option("lambda_count"));
  MagneticField B = c.magnetic_field();
  std::vector<std::vector<std::string>> rows;
  for (Theorem th : {Theorem::PsidoFio, Theorem::FioPsido, Theorem::FioFiostar, Theorem::FiostarFio}) {
    auto rep = composition_check(th, q, a, b, U, Us, B, xi0, lambdas);
    const std::string name = to_string(th);
    for (std::size_t k = 0; k < lambdas.size(); ++k) rows.push_back({name, io::fmt(lambdas[k]), io::fmt(rep.residual_max[k])});
    const double bound = claimed_residual_order(th, a.order(), b.order()) +
                         r.tolerance(th == Theorem::PsidoFio ? "slack_psido_fio" : "slack").value;
    r.report.measured["slope_" + name] = rep.slope;
    r.check("slope_" + name, rep.slope, bound, Relation::AtMost);
  }
  r.text_table("composition.csv", {"composition", "lambda", "residual_max"}, rows);
}

// ---- 6: Egorov ------------------------------------------------------------

inline void egorov(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  require_operands(c, 1);
  const Grid g = c.grid();
  g.require_dense();
  const double t = c.times.front();
  const int spu = c.int_option("steps_per_unit");
  Quantizer q(g, c.potential());
  EikonalOptions eo;
  eo.steps_per_unit = spu;
  Symbol h = c.hamiltonian();
  Eikonal eik(h, eo);
  auto [Us, det] = phase_and_det(g, eik, t);
  Symbol a = c.make_symbol(c.operands[0]);
  // F_plus = Op_Phi(1), F_minus = Op_Phi(|det|): F_plus F_minus^* = I to principal order.
  GridOperator Fp = fio_operator(q, SymbolSamples(SymbolSamples::Ones(g.size(), g.size())), Us);
  GridOperator Fm = fio_operator(q, det, Us);
  SymbolSamples measured = extract_symbol(q, Fp * weyl_operator(q, a) * Fm.adjoint());
  const Vec xi0 = axis_vec(c.dim, c.option("xi0"));
  const auto lambdas = dyadic(c.option("lambda0"), c.int_option("lambda_count"));
  auto rep = compare_on_rays(g, measured, egorov_symbol(a, h, t, spu), xi0, lambdas);
  // Control: the unpulled symbol should miss by a full order.
  auto control = compare_on_rays(g, measured, a, xi0, lambdas);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    rows.push_back({lambdas[k], rep.residual_max[k], control.residual_max[k]});
  r.table("egorov.csv", {"lambda", "residual_max", "control_residual_max"}, rows);
  r.report.measured["slope"] = rep.slope;
  r.report.measured["control_slope"] = control.slope;
  r.check("slope", rep.slope, a.order() - 1.0 + r.tolerance("slack").value, Relation::AtMost);
}

// ---- 7: magnetic propagator order -------------------------------------------

inline void magnetic_propagator(Run& r) {
  const auto& c = r.cfg();
  require_times(c, 2);
  const Grid g = c.grid();
  g.require_dense();
  MagneticField B = c.magnetic_field();
  VectorPotential A = c.potential();
  Symbol a = c.hamiltonian();
  SetupOptions so;
  so.eikonal.steps_per_unit = c.int_option("steps_per_unit");
  auto s = make_transport_setup(a, B, A, so);
  Quantizer q(g, A);
  ReferencePropagator ref(q, a);
  WaveFunction u = wave_packet(g, axis_vec(c.dim, c.option("packet_x")), axis_vec(c.dim, c.option("packet_xi")),
                               c.option("packet_sigma"));
  u.values /= u.values.norm();
  auto error = [&](double t, int k_max, double* norm) {
    PropagatorOptions po;
    po.assemble = false;
    po.k_max = k_max;
    po.source_intervals = c.int_option("source_intervals");
    auto pb = fio_propagator(s, t, q, po);
    WaveFunction v = apply_propagator(pb, q, u);
    if (norm) *norm = v.values.norm();
    return (v.values - ref.apply(t, u).values).norm();
  };
  std::vector<std::vector<double>> rows;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, norm_dev = 0.0;
  double err0_last = 0.0;
  for (double t : c.times) {
    if (t <= 0.0) throw bad("times", "must be positive for the t^2 scaling check");
    double nrm = 0.0;
    const double e = error(t, 0, &nrm);
    rows.push_back({t, 0.0, e, e / (t * t), nrm});
    lo = std::min(lo, e / (t * t));
    hi = std::max(hi, e / (t * t));
    norm_dev = std::max(norm_dev, std::abs(nrm - 1.0));
    err0_last = e;
  }
  const double t1 = c.times.back();
  double nrm1 = 0.0;
  const double e1 = error(t1, 1, &nrm1);
  rows.push_back({t1, 1.0, e1, e1 / (t1 * t1), nrm1});
  r.table("magnetic_propagator.csv", {"t", "k_max", "error", "error_over_t2", "output_norm"}, rows);
  auto& m = r.report.measured;
  m["hermiticity_defect"] = ref.hermiticity_defect();
  m["error_over_t2_spread"] = hi / lo;
  m["reduction_with_b1"] = err0_last / e1;
  m["max_norm_deviation"] = norm_dev;
  r.check("error_over_t2_spread", hi / lo, "spread");
  r.check("reduction_with_b1", err0_last / e1, "reduction");
}

// ---- 8: wave-packet transport ---------------------------------------------

inline void wavepacket(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  const Grid g = c.grid();
  g.require_dense();
  const double T = c.option("window");
  for (std::size_t i = 0; i < c.times.size(); ++i)
    if (c.times[i] > 0.8 * T) throw bad("times[" + std::to_string(i) + "]", "exceeds 0.8 times options.window");
  MagneticField B = c.magnetic_field();
  VectorPotential A = c.potential();
  Symbol a = c.hamiltonian();
  SetupOptions so;
  so.T = T;
  auto s = make_transport_setup(a, B, A, so);
  ReferencePropagator ref(Quantizer(g, A), a);
  const double sigma = c.option("packet_sigma");
  auto centers = wavepacket_track(s, ref, axis_vec(c.dim, c.option("packet_x")), axis_vec(c.dim, c.option("packet_xi")),
                                  sigma, c.times);
  std::vector<std::vector<double>> rows;
  double pos_ratio = 0.0, freq = 0.0;
  for (const auto& p : centers) {
    const double bound = 0.5 * sigma * (1.0 + p.t);
    pos_ratio = std::max(pos_ratio, p.position_deviation / bound);
    freq = std::max(freq, p.frequency_deviation);
    std::vector<double> row{p.t};
    for (int k = 0; k < c.dim; ++k) row.push_back(p.position(k));
    for (int k = 0; k < c.dim; ++k) row.push_back(p.predicted_position(k));
    for (int k = 0; k < c.dim; ++k) row.push_back(p.frequency(k));
    for (int k = 0; k < c.dim; ++k) row.push_back(p.predicted_frequency(k));
    row.insert(row.end(), {p.position_deviation, bound, p.frequency_deviation, p.boundary_mass});
    rows.push_back(std::move(row));
    if (p.wrapped)
      r.report.warnings.push_back("t = " + io::fmt(p.t) + ": boundary mass " + io::fmt(p.boundary_mass) +
                                  "; centroids may be affected by wrap-around");
  }
  std::vector<std::string> header{"t"};
  for (const char* base : {"x", "x_pred", "xi", "xi_pred"})
    for (int k = 0; k < c.dim; ++k) header.push_back(base + std::to_string(k + 1));
  header.insert(header.end(), {"position_deviation", "position_bound", "frequency_deviation", "boundary_mass"});
  r.table("wavepacket.csv", header, rows);
  r.report.measured["position_deviation_over_bound"] = pos_ratio;
  r.report.measured["frequency_deviation"] = freq;
  r.check("position_deviation_over_bound", pos_ratio, "position");
  r.check("frequency_deviation", freq, "frequency");
}

// ---- 9: kernel decay ------------------------------------------------------

inline void kernel_decay(Run& r) {
  const auto& c = r.cfg();
  require_times(c);
  if (!c.magnetic_field().is_zero()) throw bad("field", "the light-cone distance assumes the zero field");
  const double t = c.times.front();
  Symbol a = c.hamiltonian();
  auto s = make_transport_setup(a, zero_field(c.dim), zero_potential(c.dim));
  KernelDecayOptions ko;
  ko.mollifier_width = c.option("mollifier_width");
  ko.min_distance = c.option("min_distance");
  const Vec y0 = axis_vec(c.dim, c.option("y0"));
  const int refine = c.int_option("refine");
  if (refine < 2) throw bad("options.refine", "must be >= 2");
  std::vector<std::vector<double>> rows;
  std::vector<KernelDecayFit> fits;
  for (int N : {c.N, c.N * refine}) {
    Grid g(c.dim, N, c.L);
    g.require_dense();
    ReferencePropagator ref(Quantizer(g, zero_potential(c.dim)), a);
    fits.push_back(kernel_decay_probe(s, ref, t, y0, ko));
    const auto& f = fits.back();
    for (std::size_t i = 0; i < f.distance.size(); ++i) rows.push_back({static_cast<double>(N), f.distance[i], f.magnitude[i]});
  }
  r.table("kernel_decay.csv", {"N", "distance", "magnitude"}, rows);
  auto& m = r.report.measured;
  m["slope"] = fits[0].slope;
  m["slope_refined"] = fits[1].slope;
  m["floor"] = fits[0].floor;
  m["floor_refined"] = fits[1].floor;
  m["fit_points"] = fits[0].points;
  r.check("slope", fits[0].slope, "slope");
  r.check("floor_ratio", fits[1].floor / fits[0].floor, "floor_ratio");
}

// ---- 10: Weyl <-> left ----------------------------------------------------

inline void weyl_left(Run& r) {
  const auto& c = r.cfg();
  require_operands(c, 1);
  const Grid g = c.grid();
  const int d = c.dim;
  if (c.symbol != "x_dot_xi") throw bad("symbol", "the closed-form left symbol oracle needs x_dot_xi");
  Quantizer q(g, zero_potential(d));
  // Closed-form left symbol of <x, xi>: <x, xi> - i d / 2.
  Symbol a = x_dot_xi(d);
  Symbol oracle = linear_combination(a, 1.0, one_symbol(d), -kI * (0.5 * d));
  WaveFunction u = wave_packet(g, Vec::Zero(d), Vec::Constant(d, c.option("packet_xi")), c.option("packet_sigma"));
  const int terms = c.int_option("terms");
  WaveFunction w = psido_apply_weyl(q, a, u).u;
  const double kernel = relative(psido_apply_left(q, oracle, u).u.values, w.values);
  const double series = relative(psido_apply_left(q, weyl_to_left(a, terms), u).u.values, w.values);
  Symbol s = c.make_symbol(c.operands[0]);
  Symbol rt = left_to_weyl(weyl_to_left(s, terms), terms);
  std::vector<Vec> xs;
  const int nx = c.int_option("x_points");
  for (int j = 0; j < nx; ++j) xs.push_back(Vec::Constant(d, -2.0 + 4.0 * j / (nx - 1)));
  const Vec xi0 = Vec::Constant(d, 1.0) / std::sqrt(static_cast<double>(d));
  const auto lambdas = dyadic(c.option("lambda0"), c.int_option("lambda_count"));
  std::vector<std::vector<double>> rows;
  std::vector<double> maxima;
  for (double lam : lambdas) {
    double mx = 0.0;
    for (const auto& x : xs) mx = std::max(mx, std::abs(rt(x, lam * xi0) - s(x, lam * xi0)));
    maxima.push_back(mx);
    rows.push_back({lam, mx});
  }
  const double slope = order_scaling_exponent(lambdas, maxima);
  r.table("weyl_left.csv", {"lambda", "roundtrip_residual_max"}, rows);
  auto& m = r.report.measured;
  m["kernel_match"] = kernel;
  m["series_match"] = series;
  m["roundtrip_slope"] = slope;
  r.check("kernel_match", std::max(kernel, series), "kernel");
  r.check("roundtrip_slope", slope, s.order() - 2.0 + r.tolerance("slack").value, Relation::AtMost);
}

// ---- 11: cocycle ----------------------------------------------------------

inline void cocycle(Run& r) {
  const auto& c = r.cfg();
  require_dim(c, 2);
  MagneticField B = c.magnetic_field();
  VectorPotential A = c.potential();
  const int count = c.int_option("triangles");
  if (count < 1) throw bad("options.triangles", "must be positive");
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> ux(-c.option("box"), c.option("box"));
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    Vec x = make_vec({ux(rng), ux(rng)}), y = make_vec({ux(rng), ux(rng)}), z = make_vec({ux(rng), ux(rng)});
    const double e = cocycle_defect(A, B, x, y, z);
    worst = std::max(worst, e);
    rows.push_back({x(0), x(1), y(0), y(1), z(0), z(1), e});
  }
  r.table("cocycle.csv", {"x1", "x2", "y1", "y2", "z1", "z2", "defect"}, rows);
  r.report.measured["max_defect"] = worst;
  r.check("max_defect", worst, "defect");
}

inline ExperimentConfig base(std::string name, int dim, int N, double L, std::string symbol, std::string field,
                             std::vector<double> times, std::map<std::string, double> options) {
  ExperimentConfig c;
  c.scenario = std::move(name);
  c.dim = dim;
  c.N = N;
  c.L = L;
  c.symbol = std::move(symbol);
  c.field = std::move(field);
  c.times = std::move(times);
  c.options = std::move(options);
  c.output_dir = "magfio-out/" + c.scenario;
  return c;
}

inline Tolerance at_most(double v) { return {v, Relation::AtMost}; }
inline Tolerance at_least(double v) { return {v, Relation::AtLeast}; }

}  // namespace scenarios

// The builtin registry, one scenario per acceptance criterion.
inline const std::vector<Scenario>& registry() {
  using namespace scenarios;
  static const std::vector<Scenario> r = [] {
    const double two_pi = 2.0 * kPi;
    std::vector<Scenario> v;
    v.push_back({"free-propagator", 1, "FIO propagator of an x-independent Hamiltonian vs the exact FFT multiplier", 10,
                 base("free-propagator", 1, 256, 32.0, "homog_relativistic:rho=1", "zero", {0.5, 1.0},
                      {{"rho", 1.0}, {"packet_x", 0.0}, {"packet_xi", 8.0}, {"packet_sigma", 1.0}}),
                 {{"error", at_most(1e-8)}}, free_propagator});
    v.push_back({"flow-invariants", 2, "energy and symplectic defects of the RK4 flow and their step-halving ratio", 5,
                 base("flow-invariants", 2, 64, 8.0, "aniso:c=0.3", "zero", {1.0},
                      {{"samples", 100}, {"steps", 1000}, {"x_box", 3.0}, {"xi_box", 6.0}, {"diagnostic_steps", 100}}),
                 {{"energy", at_most(1e-8)}, {"symplectic", at_most(1e-6)}, {"ratio_min", at_least(8.0)},
                  {"ratio_max", at_most(32.0)}},
                 flow_invariants});
    v.push_back({"eikonal", 3, "Hamilton-Jacobi residual and generating-function identities", 30,
                 base("eikonal", 2, 64, 8.0, "aniso:c=0.3", "zero", {0.2},
                      {{"x_points", 9}, {"x_box", 2.0}, {"directions", 8}, {"eta_radius", 3.0}, {"dt", 1e-3},
                       {"fd_step", 1e-3}, {"steps_per_unit", 200}}),
                 {{"hj", at_most(1e-5)}, {"identity", at_most(1e-8)}}, eikonal_check});
    {
      ExperimentConfig c = base("gauge-check", 2, 48, 6.0, "aniso:c=0.3", "bump:b0=0.5,width=2", {},
                                {{"packet_xi", 2.0}, {"packet_sigma", 1.0}});
      c.gauge = "bilinear:c=0.25";
      c.seed = 1;
      v.push_back({"gauge-check", 4, "gauge covariance of the magnetic quantizations", 60, c,
                   {{"discrepancy", at_most(1e-8)}}, gauge_check});
    }
    {
      ExperimentConfig c = base("composition", 1, 512, two_pi, "aniso:c=0.3", "zero", {0.2},
                                {{"xi0", 1.0}, {"lambda0", 4.0}, {"lambda_count", 4}, {"steps_per_unit", 100}});
      c.operands = {"modulated:c=0.4,m=1", "twisted:c=0.3,s=0.4"};
      v.push_back({"composition", 5, "principal-symbol composition formulas vs grid-composed operators", 300, c,
                   {{"slack", at_most(0.5)}, {"slack_psido_fio", at_most(0.7)}}, composition});
    }
    {
      ExperimentConfig c = base("egorov", 1, 512, two_pi, "aniso:c=0.3", "zero", {0.2},
                                {{"xi0", 1.0}, {"lambda0", 4.0}, {"lambda_count", 4}, {"steps_per_unit", 100}});
      c.operands = {"modulated:c=0.4,m=1"};
      v.push_back({"egorov", 6, "conjugated symbol vs the classical pullback", 120, c, {{"slack", at_most(0.5)}},
                   egorov});
    }
    v.push_back({"magnetic-propagator", 7, "FIO propagator error order against the dense reference", 600,
                 base("magnetic-propagator", 2, 48, two_pi, "relativistic", "bump:b0=0.5,width=2", {0.1, 0.2, 0.4},
                      {{"packet_x", 0.0}, {"packet_xi", 3.0}, {"packet_sigma", 1.0}, {"steps_per_unit", 50},
                       {"source_intervals", 4}}),
                 {{"spread", at_most(2.0)}, {"reduction", at_least(2.0)}}, magnetic_propagator});
    v.push_back({"wavepacket", 8, "wave-packet centres follow the principal Hamiltonian flow", 300,
                 base("wavepacket", 2, 48, 4.0, "relativistic", "bump:b0=0.5,width=2", {0.0, 0.5, 1.0, 1.5, 2.0},
                      {{"window", 2.5}, {"packet_x", -1.2}, {"packet_xi", 12.0}, {"packet_sigma", 1.0}}),
                 {{"position", at_most(1.0)}, {"frequency", at_most(1.0)}}, wavepacket});
    v.push_back({"kernel-decay", 9, "off-cone decay of the propagator kernel and its discretization floor", 120,
                 base("kernel-decay", 1, 512, 32.0, "relativistic", "zero", {1.0},
                      {{"y0", 0.0}, {"mollifier_width", 0.25}, {"min_distance", 2.0}, {"refine", 2}}),
                 {{"slope", at_most(-4.0)}, {"floor_ratio", at_most(1.0)}}, kernel_decay});
    {
      ExperimentConfig c = base("weyl-left", 2, 48, 4.0, "x_dot_xi", "zero", {},
                                {{"packet_xi", 1.0}, {"packet_sigma", 0.5}, {"terms", 2}, {"x_points", 9},
                                 {"lambda0", 4.0}, {"lambda_count", 4}});
      c.operands = {"aniso:c=0.3"};
      v.push_back({"weyl-left", 10, "Weyl to left conversion: kernel oracle and roundtrip order", 60, c,
                   {{"kernel", at_most(1e-10)}, {"slack", at_most(0.5)}}, weyl_left});
    }
    {
      ExperimentConfig c = base("cocycle", 2, 64, 8.0, "relativistic", "bump:b0=0.5,width=2", {},
                                {{"triangles", 1000}, {"box", 3.0}});
      c.seed = 7;
      v.push_back({"cocycle", 11, "flux cocycle of the magnetic phases on random triangles", 5, c,
                   {{"defect", at_most(1e-10)}}, cocycle});
    }
    return v;
  }();
  return r;
}

inline std::vector<std::string> list_scenarios() {
  std::vector<std::string> names;
  for (const auto& s : registry()) names.push_back(s.name);
  return names;
}

inline const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : registry())
    if (s.name == name) return s;
  std::string known;
  for (const auto& s : registry()) known += (known.empty() ? "" : ", ") + s.name;
  throw ConfigReader::error("scenario", "unknown scenario '" + name + "' (known: " + known + ")");
}

inline ExperimentConfig default_config(const std::string& name) { return find_scenario(name).defaults; }

// Scenario-level validation: option names and tighten-only tolerances.
inline void validate(const Scenario& sc, const ExperimentConfig& c) {
  validate_common(c);
  for (const auto& [k, v] : c.options) {
    if (!sc.defaults.options.count(k)) throw ConfigReader::error("options." + k, "unknown option for '" + sc.name + "'");
    if (!std::isfinite(v)) throw ConfigReader::error("options." + k, "must be finite");
  }
  for (const auto& [k, v] : c.tolerances) {
    auto it = sc.tolerances.find(k);
    if (it == sc.tolerances.end()) throw ConfigReader::error("tolerances." + k, "unknown tolerance for '" + sc.name + "'");
    const Tolerance& pinned = it->second;
    const bool looser = pinned.relation == Relation::AtMost ? v > pinned.value : v < pinned.value;
    if (looser || !std::isfinite(v))
      throw ConfigReader::error("tolerances." + k, "may only tighten the pinned bound " + io::fmt(pinned.value));
  }
}

inline ExperimentConfig parse_experiment(const json& j) {
  if (!j.is_object()) throw ConfigReader::error("", "top level must be an object");
  if (!j.contains("scenario") || !j.at("scenario").is_string())
    throw ConfigReader::error("scenario", "required string field is missing");
  const Scenario& sc = find_scenario(j.at("scenario").get<std::string>());
  ExperimentConfig c = parse_config(j, sc.defaults);
  validate(sc, c);
  return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& p) { return parse_experiment(io::read_json(p)); }

// Runs a validated config, writes report.json next to the CSV artifacts.
inline RunReport run(const ExperimentConfig& cfg) {
  const Scenario& sc = find_scenario(cfg.scenario);
  validate(sc, cfg);
  Run r(sc, cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const auto start = std::chrono::steady_clock::now();
  sc.body(r);
  r.report.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.check("runtime_s", r.report.wall_clock, sc.budget_s, Relation::AtMost);
  io::write_json(r.out("report.json"), to_json(r.report));
  return r.report;
}

// Caps OpenMP parallelism from MAGFIO_THREADS; returns the cap or 0 if unset.
inline int apply_thread_limit() {
  const char* env = std::getenv("MAGFIO_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("MAGFIO_THREADS: expected a positive integer, got '" + std::string(env) + "'");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
  return static_cast<int>(n);
}

}  // namespace magfio::cli
