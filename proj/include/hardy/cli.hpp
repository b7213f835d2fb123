#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hardy/io.hpp"

namespace hardy {

struct RunConfig {
  int dim = 1;
  int q0_scale = 8;
  std::array<std::int64_t, kMaxDim> q0_corner{};
  int n_layers = 4;
  std::optional<double> kappa0;  // default_kappa0(dim) when unset
  std::uint64_t seed = 42;
  std::map<std::string, double> tolerances = default_tolerances();
  std::string output_dir = "out";

  std::optional<double> alpha;
  double p = 2.0;
  double p1 = 4.0;
  double t_min = 1e-3;
  double t_max = 1e3;
  int t_steps = 25;
  std::string kernel = "radial-bump";
  std::optional<int> count;

  static std::map<std::string, double> default_tolerances();
  /// Throws ConfigInvalid.
  void validate() const;
  double kappa0_value() const;
  double tol(const std::string& name) const;
  ComputationDomain domain() const;
};

RunConfig config_from_json(const Json& j);
Json to_json(const RunConfig& c);

/// One gated property; measured and bound describe the worst instance.
struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  std::size_t instances = 0;
};

struct RunReport {
  std::string subcommand;
  Json config;
  std::vector<Check> checks;
  Json results;
  std::string csv;
  /// Extra files as (suffix, content), written next to the report.
  std::vector<std::pair<std::string, std::string>> attachments;
  double wall_time_s = 0.0;  // kept out of the JSON so reports stay byte-identical

  bool passed() const;
  const Check* find(const std::string& name) const;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand. Module errors propagate unchanged.
RunReport run(const std::string& subcommand, const RunConfig& config);

std::string report_json(const RunReport& r);

/// <dir>/<subcommand>.json, <dir>/<subcommand>.csv and attachments; returns the written paths.
std::vector<std::string> write_artifacts(const RunReport& r, const std::string& dir);

}  // namespace hardy
