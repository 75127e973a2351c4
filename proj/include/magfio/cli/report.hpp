#pragma once

#include "magfio/cli/config.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace magfio::cli {

enum class Relation { AtMost, AtLeast };

// One measured quantity compared with its bound.
struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  Relation relation = Relation::AtMost;
  bool pass = false;

  std::string describe() const {
    std::ostringstream s;
    s << name << " = " << io::fmt(value) << (relation == Relation::AtMost ? " <= " : " >= ") << io::fmt(bound);
    return s.str();
  }
};

// Outcome of one scenario. Each scenario reproduces exactly one acceptance
// criterion, identified by `criterion`; `pass` is the verdict for it.
struct RunReport {
  std::string scenario;
  int criterion = 0;
  json inputs;
  json measured = json::object();
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  double wall_clock = 0.0;

  bool pass() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const Check& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw Error("report has no check '" + name + "'");
  }

  std::string summary() const {
    std::ostringstream s;
    for (std::size_t i = 0; i < checks.size(); ++i) s << (i ? "; " : "") << checks[i].describe();
    return s.str();
  }
};

inline json to_json(const Check& c) {
  return {{"name", c.name},
          {"value", c.value},
          {"bound", c.bound},
          {"relation", c.relation == Relation::AtMost ? "<=" : ">="},
          {"pass", c.pass}};
}

inline json to_json(const RunReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"scenario", r.scenario},
          {"criterion", r.criterion},
          {"pass", r.pass()},
          {"checks", checks},
          {"measured", r.measured},
          {"inputs", r.inputs},
          {"artifacts", r.artifacts},
          {"warnings", r.warnings},
          {"wall_clock_s", r.wall_clock}};
}

enum ExitCode : int { kExitPass = 0, kExitCriterionFail = 1, kExitConfigError = 2, kExitNumericalError = 3 };

}  // namespace magfio::cli
