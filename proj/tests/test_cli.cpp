#include "magfio/cli/scenarios.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace magfio;
using namespace magfio::cli;
namespace fs = std::filesystem;

namespace {

struct ToolResult {
  int code = -1;
  std::string output;
};

ToolResult tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" MAGFIO_TOOL_PATH "' " + args + " 2>&1";
  ToolResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) r.output += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config_path(const std::string& name) { return std::string(MAGFIO_CONFIG_DIR) + "/" + name + ".json"; }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("magfio-cli-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json minimal(const std::string& scenario) { return {{"schema_version", kSchemaVersion}, {"scenario", scenario}}; }

std::string config_error(const json& j) {
  try {
    parse_experiment(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Registry, OneScenarioPerCriterion) {
  const auto names = list_scenarios();
  EXPECT_GE(names.size(), 10u);
  EXPECT_NE(std::find(names.begin(), names.end(), "free-propagator"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "egorov"), names.end());
  std::vector<int> criteria;
  for (const auto& s : registry()) criteria.push_back(s.criterion);
  std::sort(criteria.begin(), criteria.end());
  for (int k = 0; k < static_cast<int>(criteria.size()); ++k) EXPECT_EQ(criteria[static_cast<std::size_t>(k)], k + 1);
}

TEST(Registry, DefaultsValidate) {
  for (const auto& s : registry()) EXPECT_NO_THROW(validate(s, s.defaults)) << s.name;
}

TEST(Config, ShippedConfigsMatchDefaults) {
  for (const auto& s : registry()) {
    ExperimentConfig c = load_experiment(config_path(s.name));
    EXPECT_EQ(to_json(c), to_json(s.defaults)) << s.name;
  }
}

TEST(Config, ErrorsCarryFieldPaths) {
  auto with = [](json patch) {
    json j = minimal("cocycle");
    j.merge_patch(patch);
    return config_error(j);
  };
  EXPECT_NE(with({{"grid", {{"N", 47}}}}).find("grid.N"), std::string::npos);
  EXPECT_NE(with({{"grid", {{"L", "wide"}}}}).find("grid.L"), std::string::npos);
  EXPECT_NE(with({{"schema_version", 2}}).find("schema_version"), std::string::npos);
  EXPECT_NE(with({{"symbol", "no_such_symbol"}}).find("symbol"), std::string::npos);
  EXPECT_NE(with({{"operands", {"one", "bogus"}}}).find("operands[1]"), std::string::npos);
  EXPECT_NE(with({{"times", {0.1, -1.0}}}).find("times[1]"), std::string::npos);
  EXPECT_NE(with({{"options", {{"nonsense", 1}}}}).find("options.nonsense"), std::string::npos);
  EXPECT_NE(with({{"colour", "blue"}}).find("colour"), std::string::npos);
  EXPECT_NE(config_error({{"schema_version", 1}}).find("scenario"), std::string::npos);
  EXPECT_NE(config_error(minimal("no-such-scenario")).find("unknown scenario"), std::string::npos);
}

TEST(Config, TolerancesMayOnlyTighten) {
  json j = minimal("cocycle");
  j["tolerances"] = {{"defect", 1e-12}};
  EXPECT_EQ(parse_experiment(j).tolerances.at("defect"), 1e-12);
  j["tolerances"] = {{"defect", 1e-6}};
  EXPECT_NE(config_error(j).find("tolerances.defect"), std::string::npos);
  json r = minimal("magnetic-propagator");
  r["tolerances"] = {{"reduction", 1.5}};  // an at-least bound loosens downwards
  EXPECT_NE(config_error(r).find("tolerances.reduction"), std::string::npos);
  r["tolerances"] = {{"reduction", 3.0}};
  EXPECT_NO_THROW(parse_experiment(r));
}

TEST(Config, OverridesKeepRemainingDefaults) {
  json j = minimal("composition");
  j["options"] = {{"lambda_count", 3}};
  ExperimentConfig c = parse_experiment(j);
  EXPECT_EQ(c.int_option("lambda_count"), 3);
  EXPECT_EQ(c.option("xi0"), 1.0);
  EXPECT_EQ(c.N, 512);
  EXPECT_EQ(c.operands.size(), 2u);
}

TEST(Report, EmptyReportDoesNotPass) {
  RunReport r;
  EXPECT_FALSE(r.pass());
  json j = to_json(r);
  EXPECT_FALSE(j.at("pass").get<bool>());
}

TEST(Run, ScenarioRejectsUnsuitableInputs) {
  ExperimentConfig c = default_config("free-propagator");
  c.symbol = "aniso:c=0.3";
  c.output_dir = scratch("unsuitable").string();
  try {
    run(c);
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("symbol"), std::string::npos);
  }
}

TEST(Tool, ListsScenarios) {
  ToolResult r = tool("list");
  EXPECT_EQ(r.code, kExitPass);
  EXPECT_NE(r.output.find("free-propagator"), std::string::npos);
  EXPECT_NE(r.output.find("egorov"), std::string::npos);
  EXPECT_GE(std::count(r.output.begin(), r.output.end(), '\n'), 10);
}

TEST(Tool, MalformedConfigExitsWithFieldPath) {
  fs::path dir = scratch("malformed");
  json j = minimal("gauge-check");
  j["grid"] = {{"N", 33}};
  io::write_json(dir / "bad.json", j);
  ToolResult r = tool("run '" + (dir / "bad.json").string() + "'");
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.output.find("grid.N"), std::string::npos) << r.output;

  std::ofstream(dir / "broken.json") << "{ \"schema_version\": 1, ";
  EXPECT_EQ(tool("run '" + (dir / "broken.json").string() + "'").code, kExitConfigError);
  EXPECT_EQ(tool("run '" + (dir / "missing.json").string() + "'").code, kExitConfigError);
  EXPECT_EQ(tool("run").code, kExitConfigError);
}

TEST(Tool, LooseToleranceOverrideIsAConfigError) {
  ToolResult r = tool("gauge-check --tol discrepancy=1e-3 --out '" + scratch("loose").string() + "'");
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.output.find("tolerances.discrepancy"), std::string::npos) << r.output;
}

TEST(Tool, FreePropagatorPasses) {
  fs::path dir = scratch("free");
  ToolResult r = tool("run '" + config_path("free-propagator") + "' --out '" + dir.string() + "'");
  ASSERT_EQ(r.code, kExitPass) << r.output;
  json rep = io::read_json(dir / "report.json");
  EXPECT_TRUE(rep.at("pass").get<bool>());
  EXPECT_LE(rep.at("measured").at("max_relative_error").get<double>(), 1e-8);
  EXPECT_TRUE(fs::exists(dir / "free_propagator.csv"));
}

TEST(Tool, GaugeCheckPasses) {
  fs::path dir = scratch("gauge");
  ToolResult r = tool("run '" + config_path("gauge-check") + "' --out '" + dir.string() + "'");
  ASSERT_EQ(r.code, kExitPass) << r.output;
  json rep = io::read_json(dir / "report.json");
  EXPECT_LE(rep.at("measured").at("max_relative_discrepancy").get<double>(), 1e-8);
}

TEST(Tool, CriterionFailureExitsOne) {
  ToolResult r = tool("run '" + config_path("cocycle") + "' --tol defect=1e-300 --out '" + scratch("strict").string() + "'");
  EXPECT_EQ(r.code, kExitCriterionFail) << r.output;
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
}

TEST(Tool, NumericalFailureExitsThree) {
  // No kernel samples at distance >= 100 on a box of half-width 32.
  ToolResult r = tool("kernel-decay --set min_distance=100 --out '" + scratch("numerical").string() + "'");
  EXPECT_EQ(r.code, kExitNumericalError) << r.output;
}

TEST(Tool, SameSeedGivesIdenticalBytes) {
  fs::path a = scratch("seed-a"), b = scratch("seed-b"), c = scratch("seed-c");
  const std::string cfg = "run '" + config_path("cocycle") + "' --out ";
  ASSERT_EQ(tool(cfg + "'" + a.string() + "'").code, kExitPass);
  ASSERT_EQ(tool(cfg + "'" + b.string() + "'").code, kExitPass);
  ASSERT_EQ(tool(cfg + "'" + c.string() + "' --seed 8").code, kExitPass);
  const std::string first = slurp(a / "cocycle.csv");
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(b / "cocycle.csv"));
  EXPECT_NE(first, slurp(c / "cocycle.csv"));
}

TEST(Tool, ThreadLimitIsValidated) {
  EXPECT_EQ(tool("list", "MAGFIO_THREADS=1").code, kExitPass);
  EXPECT_EQ(tool("list", "MAGFIO_THREADS=zero").code, kExitConfigError);
}

TEST(Tool, PrimitiveSubcommands) {
  fs::path dir = scratch("primitives");
  ToolResult f = tool("flow --symbol aniso:c=0.3 --Y 0.5 2 --t 1 --steps 200 --out '" + (dir / "flow.csv").string() + "'");
  ASSERT_EQ(f.code, kExitPass) << f.output;
  EXPECT_NE(f.output.find("energy_defect"), std::string::npos);

  ToolResult e = tool("eikonal --dim 2 --symbol aniso:c=0.3 --t 0.2 --x 0.5 -0.5 --eta 3 1");
  ASSERT_EQ(e.code, kExitPass) << e.output;
  json ej = json::parse(e.output);
  EXPECT_LE(ej.at("hj_residual").get<double>(), 1e-5);

  const std::string grid = "--dim 1 --N 16 --L 4 --symbol aniso:c=0.3 ";
  ASSERT_EQ(tool("kernel " + grid + "--kind weyl --out '" + (dir / "k.bin").string() + "'").code, kExitPass);
  ASSERT_EQ(tool("extract-symbol --kernel '" + (dir / "k.bin").string() + "' --out '" + (dir / "s.csv").string() + "'").code,
            kExitPass);
  const std::string csv = slurp(dir / "s.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 16 * 16);

  ASSERT_EQ(tool("apply " + grid + "--quantization left --xi0 2 --out '" + (dir / "u.csv").string() + "'").code, kExitPass);
  ToolResult p = tool("propagate --dim 1 --N 32 --L 8 --t 0.2 --xi0 3 --reference --out '" + (dir / "p.csv").string() + "'");
  ASSERT_EQ(p.code, kExitPass) << p.output;
  EXPECT_NE(p.output.find("relative_error"), std::string::npos);

  EXPECT_EQ(tool("apply " + grid + "--quantization bogus --out x.csv").code, kExitConfigError);
  EXPECT_EQ(tool("flow --Y 1 2 3").code, kExitConfigError);
}
