#pragma once

#include "magfio/io/io.hpp"
#include "magfio/magnetic/potential.hpp"
#include "magfio/symbols/builtin.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace magfio::cli {

using io::json;

inline constexpr int kSchemaVersion = 1;

// One experiment: a named scenario plus its inputs. Scenario-specific knobs
// live in `options`; `tolerances` may only tighten the pinned bounds.
struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string scenario;
  int dim = 1;
  int N = 64;
  double L = 8.0;
  std::string symbol = "relativistic";
  std::string field = "zero";
  std::string gauge = "zero";
  std::vector<std::string> operands;
  std::vector<double> times;
  std::map<std::string, double> tolerances;
  std::map<std::string, double> options;
  std::string output_dir = "magfio-out";
  std::uint64_t seed = 0;

  Grid grid() const { return Grid(dim, N, L); }
  Symbol make_symbol(const std::string& spec) const { return magfio::make_symbol(NamedSpec::parse(spec), dim); }
  Symbol hamiltonian() const { return make_symbol(symbol); }
  MagneticField magnetic_field() const { return make_field(NamedSpec::parse(field), dim); }
  GaugeFunction gauge_function() const { return make_gauge(NamedSpec::parse(gauge), dim); }
  VectorPotential potential() const {
    MagneticField B = magnetic_field();
    return B.is_zero() ? zero_potential(dim) : transverse_gauge(B);
  }
  double option(const std::string& key) const {
    auto it = options.find(key);
    if (it == options.end()) throw ConfigError("options." + key + ": missing");
    return it->second;
  }
  int int_option(const std::string& key) const {
    double v = option(key);
    if (v != std::floor(v)) throw ConfigError("options." + key + ": must be an integer");
    return static_cast<int>(v);
  }
};

// Reader that reports the JSON path of every error it raises.
class ConfigReader {
 public:
  explicit ConfigReader(const json& j, std::string path = "") : j_(j), path_(std::move(path)) {}

  static ConfigError error(const std::string& path, const std::string& what) {
    return ConfigError((path.empty() ? std::string("config") : path) + ": " + what);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) const {
    if (!j_.contains(key)) throw error(child(key), "required field is missing");
    return j_.at(key);
  }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw error(child(key), "expected a string");
    return v.get<std::string>();
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw error(child(key), "expected a number");
    return v.get<double>();
  }

  long integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw error(child(key), "expected an integer");
    return v.get<long>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw error(child(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw error(child(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw error(child(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw error(child(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  std::map<std::string, double> number_map(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_object()) throw error(child(key), "expected an object of numbers");
    std::map<std::string, double> out;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!it.value().is_number()) throw error(child(key) + "." + it.key(), "expected a number");
      out[it.key()] = it.value().get<double>();
    }
    return out;
  }

  ConfigReader object(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_object()) throw error(child(key), "expected an object");
    return ConfigReader(v, child(key));
  }

  void check_keys(const std::vector<std::string>& allowed) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
        throw error(child(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
};

namespace detail {

// Re-raise registry errors with the field path that named the entry.
template <class F>
void check_registry(const std::string& path, F&& build) {
  try {
    build();
  } catch (const ConfigError& e) {
    throw ConfigReader::error(path, e.what());
  }
}

}  // namespace detail

// Structural checks that do not depend on the scenario.
inline void validate_common(const ExperimentConfig& c) {
  if (c.schema_version != kSchemaVersion)
    throw ConfigReader::error("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                                                    " (expected " + std::to_string(kSchemaVersion) + ")");
  if (c.dim < 1 || c.dim > 2) throw ConfigReader::error("dim", "must be 1 or 2");
  if (c.N < 4 || c.N % 2 != 0) throw ConfigReader::error("grid.N", "must be an even integer >= 4");
  if (!(c.L > 0.0)) throw ConfigReader::error("grid.L", "must be positive");
  for (std::size_t i = 0; i < c.times.size(); ++i)
    if (!std::isfinite(c.times[i]) || c.times[i] < 0.0)
      throw ConfigReader::error("times[" + std::to_string(i) + "]", "must be finite and non-negative");
  detail::check_registry("symbol", [&] { c.hamiltonian(); });
  detail::check_registry("field", [&] { c.magnetic_field(); });
  detail::check_registry("gauge", [&] { c.gauge_function(); });
  for (std::size_t i = 0; i < c.operands.size(); ++i)
    detail::check_registry("operands[" + std::to_string(i) + "]", [&] { c.make_symbol(c.operands[i]); });
}

// Fields absent from `j` keep their value from `base` (the scenario defaults).
inline ExperimentConfig parse_config(const json& j, const ExperimentConfig& base = {}) {
  if (!j.is_object()) throw ConfigReader::error("", "top level must be an object");
  ConfigReader r(j);
  r.check_keys({"schema_version", "scenario", "dim", "grid", "symbol", "field", "gauge", "operands", "times",
                "tolerances", "options", "output_dir", "seed"});
  const long version = r.integer("schema_version");
  if (version != kSchemaVersion)
    throw ConfigReader::error("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                                    std::to_string(kSchemaVersion) + ")");
  ExperimentConfig c = base;
  c.schema_version = kSchemaVersion;
  c.scenario = r.string("scenario");
  if (r.has("dim")) c.dim = static_cast<int>(r.integer("dim"));
  if (r.has("grid")) {
    ConfigReader g = r.object("grid");
    g.check_keys({"N", "L"});
    if (g.has("N")) c.N = static_cast<int>(g.integer("N"));
    if (g.has("L")) c.L = g.number("L");
  }
  if (r.has("symbol")) c.symbol = r.string("symbol");
  if (r.has("field")) c.field = r.string("field");
  if (r.has("gauge")) c.gauge = r.string("gauge");
  if (r.has("operands")) c.operands = r.strings("operands");
  if (r.has("times")) c.times = r.numbers("times");
  if (r.has("tolerances")) c.tolerances = r.number_map("tolerances");
  if (r.has("options")) {
    for (const auto& [k, v] : r.number_map("options")) c.options[k] = v;
  }
  if (r.has("output_dir")) c.output_dir = r.string("output_dir");
  if (r.has("seed")) {
    long s = r.integer("seed");
    if (s < 0) throw ConfigReader::error("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  validate_common(c);
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  return {{"schema_version", c.schema_version},
          {"scenario", c.scenario},
          {"dim", c.dim},
          {"grid", {{"N", c.N}, {"L", c.L}}},
          {"symbol", c.symbol},
          {"field", c.field},
          {"gauge", c.gauge},
          {"operands", c.operands},
          {"times", c.times},
          {"tolerances", c.tolerances},
          {"options", c.options},
          {"output_dir", c.output_dir},
          {"seed", c.seed}};
}

}  // namespace magfio::cli
