#include "magfio/cli/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace magfio;
using namespace magfio::cli;

Vec vec(const std::string& flag, const std::vector<double>& v, int d) {
  if (v.empty()) return Vec::Zero(d);
  if (static_cast<int>(v.size()) != d) throw ConfigError(flag + ": expected " + std::to_string(d) + " component(s)");
  return Eigen::Map<const Vec>(v.data(), d);
}

std::pair<std::string, double> key_value(const std::string& flag, const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(flag + ": expected key=value, got '" + s + "'");
  try {
    std::size_t used = 0;
    double v = std::stod(s.substr(eq + 1), &used);
    if (used != s.size() - eq - 1) throw std::invalid_argument("trailing characters");
    return {s.substr(0, eq), v};
  } catch (const std::logic_error&) {
    throw ConfigError(flag + ": '" + s.substr(eq + 1) + "' is not a number");
  }
}

// Physical setup shared by the primitive subcommands.
struct Setup {
  int dim = 1;
  int N = 64;
  double L = 8.0;
  std::string symbol = "relativistic";
  std::string field = "zero";

  void add(CLI::App* app) {
    app->add_option("--dim", dim, "spatial dimension (1 or 2)")->check(CLI::Range(1, 2));
    app->add_option("--N", N, "grid points per axis (even)");
    app->add_option("--L", L, "half-width of the periodic box");
    app->add_option("--symbol", symbol, "symbol spec, e.g. aniso:c=0.3");
    app->add_option("--field", field, "magnetic field spec, e.g. bump:b0=0.5,width=2");
  }

  ExperimentConfig config() const {
    ExperimentConfig c;
    c.dim = dim;
    c.N = N;
    c.L = L;
    c.symbol = symbol;
    c.field = field;
    validate_common(c);
    return c;
  }
};

struct Packet {
  std::vector<double> x0, xi0;
  double sigma = 1.0;

  void add(CLI::App* app) {
    app->add_option("--x0", x0, "packet centre (default 0)");
    app->add_option("--xi0", xi0, "packet frequency (default 0)");
    app->add_option("--sigma", sigma, "packet width");
  }

  WaveFunction make(const Grid& g) const {
    return wave_packet(g, vec("--x0", x0, g.dim()), vec("--xi0", xi0, g.dim()), sigma);
  }
};

// Scenario invocation: optional config file plus command-line overrides.
struct ScenarioArgs {
  std::string config, out;
  std::optional<int> N;
  std::optional<double> L;
  std::optional<long> seed;
  std::vector<std::string> options, tolerances;
  std::vector<double> times;

  void add(CLI::App* app, bool config_flag = true) {
    if (config_flag) app->add_option("--config", config, "JSON config (defaults to the builtin scenario config)");
    app->add_option("--out", out, "output directory");
    app->add_option("--N", N, "grid points per axis");
    app->add_option("--L", L, "box half-width");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--times", times, "evaluation times");
    app->add_option("--set", options, "scenario option override key=value")->take_all();
    app->add_option("--tol", tolerances, "tolerance override key=value (may only tighten)")->take_all();
  }

  ExperimentConfig resolve(const std::string& scenario) const {
    json j = config.empty() ? json{{"schema_version", kSchemaVersion}, {"scenario", scenario}} : io::read_json(config);
    if (!scenario.empty() && j.value("scenario", scenario) != scenario)
      throw ConfigError("scenario: config names '" + j.value("scenario", std::string()) + "', expected '" + scenario + "'");
    if (!out.empty()) j["output_dir"] = out;
    if (N) j["grid"]["N"] = *N;
    if (L) j["grid"]["L"] = *L;
    if (seed) j["seed"] = *seed;
    if (!times.empty()) j["times"] = times;
    for (const auto& s : options) {
      auto [k, v] = key_value("--set", s);
      j["options"][k] = v;
    }
    for (const auto& s : tolerances) {
      auto [k, v] = key_value("--tol", s);
      j["tolerances"][k] = v;
    }
    return parse_experiment(j);
  }
};

int report_run(const ExperimentConfig& cfg) {
  RunReport r = run(cfg);
  for (const auto& c : r.checks) std::cout << (c.pass ? "  ok   " : "  FAIL ") << c.describe() << '\n';
  for (const auto& w : r.warnings) std::cout << "  warning: " << w << '\n';
  std::cout << (r.pass() ? "PASS " : "FAIL ") << r.scenario << " (" << io::fmt(r.wall_clock) << " s) -> "
            << (std::filesystem::path(cfg.output_dir) / "report.json").string() << '\n';
  return r.pass() ? kExitPass : kExitCriterionFail;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Magnetic Fourier integral operators: numerics and experiment runner"};
  app.require_subcommand(1);
  int code = kExitPass;

  // list
  app.add_subcommand("list", "print the builtin scenarios")->callback([] {
    for (const auto& s : registry()) std::cout << s.name << '\t' << s.criterion << '\t' << s.summary << '\n';
  });

  // run <config>
  std::string run_path;
  ScenarioArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run a scenario from a config file");
  run_cmd->add_option("config", run_path, "JSON config")->required();
  run_args.add(run_cmd, false);
  run_cmd->callback([&] {
    run_args.config = run_path;
    code = report_run(run_args.resolve(""));
  });

  // Scenario-backed checks.
  std::vector<std::unique_ptr<ScenarioArgs>> scen_args;
  for (auto [cmd, scenario] : std::vector<std::pair<std::string, std::string>>{{"gauge-check", "gauge-check"},
                                                                               {"compose-check", "composition"},
                                                                               {"egorov-check", "egorov"},
                                                                               {"wavefront", "wavepacket"},
                                                                               {"kernel-decay", "kernel-decay"}}) {
    auto* sub = app.add_subcommand(cmd, "run the '" + scenario + "' scenario: " + find_scenario(scenario).summary);
    scen_args.push_back(std::make_unique<ScenarioArgs>());
    ScenarioArgs* a = scen_args.back().get();
    a->add(sub);
    sub->callback([&code, a, scenario] { code = report_run(a->resolve(scenario)); });
  }

  // flow
  Setup flow_setup;
  std::vector<double> flow_y;
  double flow_t = 1.0;
  int flow_steps = 1000;
  std::string flow_out;
  auto* flow = app.add_subcommand("flow", "integrate the Hamiltonian flow from one phase-space point");
  flow_setup.add(flow);
  flow->add_option("--Y", flow_y, "initial point (y, eta), 2 dim numbers")->required();
  flow->add_option("--t", flow_t, "final time");
  flow->add_option("--steps", flow_steps, "RK4 steps (even)");
  flow->add_option("--out", flow_out, "trajectory CSV");
  flow->callback([&] {
    ExperimentConfig c = flow_setup.config();
    Symbol a = c.hamiltonian();
    PhaseVec Y = vec("--Y", flow_y, 2 * c.dim);
    FlowOptions fo;
    fo.steps = flow_steps;
    auto tr = hamiltonian_flow(a, Y, flow_t, fo);
    std::cout << "energy_defect " << io::fmt(energy_defect(a, tr)) << "\nsymplectic_defect "
              << io::fmt(symplectic_defect(tr)) << '\n';
    if (!flow_out.empty()) {
      std::vector<std::string> header{"t"};
      for (int k = 0; k < c.dim; ++k) header.push_back("x" + std::to_string(k + 1));
      for (int k = 0; k < c.dim; ++k) header.push_back("xi" + std::to_string(k + 1));
      header.push_back("energy");
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < tr.states.size(); ++i) {
        std::vector<double> row{tr.times[i]};
        for (int k = 0; k < 2 * c.dim; ++k) row.push_back(tr.states[i](k));
        row.push_back(a(head(tr.states[i]), tail(tr.states[i])).real());
        rows.push_back(std::move(row));
      }
      io::write_table_csv(flow_out, header, rows);
    }
  });

  // eikonal
  Setup eik_setup;
  std::vector<double> eik_x, eik_eta;
  double eik_t = 0.2;
  int eik_spu = 200;
  auto* eik = app.add_subcommand("eikonal", "evaluate the generating function and its checks at one point");
  eik_setup.add(eik);
  eik->add_option("--t", eik_t, "time");
  eik->add_option("--x", eik_x, "position")->required();
  eik->add_option("--eta", eik_eta, "frequency")->required();
  eik->add_option("--steps-per-unit", eik_spu, "RK4 steps per unit time");
  eik->callback([&] {
    ExperimentConfig c = eik_setup.config();
    EikonalOptions eo;
    eo.steps_per_unit = eik_spu;
    Eikonal e(c.hamiltonian(), eo);
    Vec x = vec("--x", eik_x, c.dim), eta = vec("--eta", eik_eta, c.dim);
    EikonalPoint p = e.evaluate(eik_t, x, eta);
    auto v = [](const Vec& w) { return std::vector<double>(w.data(), w.data() + w.size()); };
    json j = {{"U", p.U},
              {"grad_x", v(p.grad_x)},
              {"grad_eta", v(p.grad_eta)},
              {"hj_residual", e.hj_residual(eik_t, x, eta)},
              {"identity_defect", identity_defect(e, eik_t, x, eta).worst()}};
    std::cout << j.dump(2) << '\n';
  });

  // apply
  Setup apply_setup;
  Packet apply_packet;
  std::string apply_quant = "weyl", apply_out;
  double apply_t = 0.0;
  auto* apply = app.add_subcommand("apply", "apply a quantized symbol to a Gaussian packet");
  apply_setup.add(apply);
  apply_packet.add(apply);
  apply->add_option("--quantization", apply_quant, "weyl, left or fio")->check(CLI::IsMember({"weyl", "left", "fio"}));
  apply->add_option("--t", apply_t, "eikonal time of the fio phase");
  apply->add_option("--out", apply_out, "output wave CSV")->required();
  apply->callback([&] {
    ExperimentConfig c = apply_setup.config();
    Grid g = c.grid();
    Quantizer q(g, c.potential());
    Symbol a = c.hamiltonian();
    WaveFunction u = apply_packet.make(g);
    ApplyResult r = apply_quant == "weyl"   ? psido_apply_weyl(q, a, u)
                    : apply_quant == "left" ? psido_apply_left(q, a, u)
                                            : fio_apply(q, a, eikonal_phase(g, Eikonal(a), apply_t), u);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    io::write_wave_csv(apply_out, r.u);
  });

  // kernel
  Setup kernel_setup;
  std::string kernel_kind = "weyl", kernel_out;
  double kernel_t = 0.0;
  auto* kernel = app.add_subcommand("kernel", "dump a dense operator kernel as complex64");
  kernel_setup.add(kernel);
  kernel->add_option("--kind", kernel_kind, "weyl, left, fio or fio_adjoint")
      ->check(CLI::IsMember({"weyl", "left", "fio", "fio_adjoint"}));
  kernel->add_option("--t", kernel_t, "eikonal time of the fio phase");
  kernel->add_option("--out", kernel_out, "binary output (sidecar at OUT.json)")->required();
  kernel->callback([&] {
    ExperimentConfig c = kernel_setup.config();
    Grid g = c.grid();
    Quantizer q(g, c.potential());
    Symbol a = c.hamiltonian();
    KernelKind kind = kernel_kind_from_string(kernel_kind);
    std::optional<PhaseSamples> U;
    if (kind == KernelKind::Fio || kind == KernelKind::FioAdjoint) U = eikonal_phase(g, Eikonal(a), kernel_t);
    io::dump_operator(kernel_out, kernel_matrix(kind, q, a, U ? &*U : nullptr));
  });

  // extract-symbol
  std::string ex_in, ex_out, ex_field = "zero", ex_symbol = "relativistic";
  std::optional<double> ex_t;
  auto* ex = app.add_subcommand("extract-symbol", "recover the symbol of a dumped kernel");
  ex->add_option("--kernel", ex_in, "kernel dump written by 'kernel'")->required();
  ex->add_option("--field", ex_field, "magnetic field the kernel was built with");
  ex->add_option("--t", ex_t, "extract relative to the eikonal phase at this time");
  ex->add_option("--symbol", ex_symbol, "Hamiltonian of that eikonal phase");
  ex->add_option("--out", ex_out, "symbol CSV")->required();
  ex->callback([&] {
    GridOperator K = io::load_operator(ex_in);
    ExperimentConfig c;
    c.dim = K.grid.dim();
    c.N = K.grid.N();
    c.L = K.grid.L();
    c.field = ex_field;
    c.symbol = ex_symbol;
    validate_common(c);
    Quantizer q(K.grid, c.potential());
    std::optional<PhaseSamples> U;
    if (ex_t) U = eikonal_phase(K.grid, Eikonal(c.hamiltonian()), *ex_t);
    io::write_symbol_csv(ex_out, K.grid, extract_symbol(q, K, U ? &*U : nullptr));
  });

  // propagate
  Setup prop_setup;
  Packet prop_packet;
  double prop_t = 0.1;
  int prop_kmax = 0, prop_spu = 50;
  bool prop_ref = false;
  std::string prop_out;
  auto* prop = app.add_subcommand("propagate", "apply the FIO propagator to a Gaussian packet");
  prop_setup.add(prop);
  prop_packet.add(prop);
  prop->add_option("--t", prop_t, "time");
  prop->add_option("--k-max", prop_kmax, "transport terms beyond the leading one (0 or 1)");
  prop->add_option("--steps-per-unit", prop_spu, "RK4 steps per unit time for the eikonal");
  prop->add_flag("--reference", prop_ref, "also report the error against the dense reference");
  prop->add_option("--out", prop_out, "output wave CSV");
  prop->callback([&] {
    ExperimentConfig c = prop_setup.config();
    Grid g = c.grid();
    VectorPotential A = c.potential();
    Quantizer q(g, A);
    Symbol a = c.hamiltonian();
    SetupOptions so;
    so.eikonal.steps_per_unit = prop_spu;
    auto s = make_transport_setup(a, c.magnetic_field(), A, so);
    PropagatorOptions po;
    po.assemble = false;
    po.k_max = prop_kmax;
    WaveFunction u = prop_packet.make(g);
    WaveFunction v = apply_propagator(fio_propagator(s, prop_t, q, po), q, u);
    std::cout << "norm_in " << io::fmt(u.values.norm()) << "\nnorm_out " << io::fmt(v.values.norm()) << '\n';
    if (prop_ref) {
      ReferencePropagator ref(q, a);
      std::cout << "relative_error " << io::fmt(scenarios::relative(v.values, ref.apply(prop_t, u).values)) << '\n';
    }
    if (!prop_out.empty()) io::write_wave_csv(prop_out, v);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitConfigError;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    magfio::cli::apply_thread_limit();
    return dispatch(argc, argv);
  } catch (const magfio::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const magfio::CapError& e) {
    std::cerr << "size cap: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const magfio::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumericalError;
  }
}
