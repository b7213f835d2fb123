#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hardy/cli.hpp"
#include "hardy/errors.hpp"
#include "hardy/parallel.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> alpha;
  std::optional<double> p;
  std::optional<std::string> p1;
  std::optional<double> t_min;
  std::optional<double> t_max;
  std::optional<int> t_steps;
  std::optional<std::string> kernel;
  std::optional<int> count;
  std::optional<int> dim;
};

hardy::RunConfig load(const Overrides& o) {
  hardy::Json j = hardy::Json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw hardy::ConfigInvalid("cannot read config " + o.config_path);
    try {
      j = hardy::Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw hardy::ConfigInvalid(o.config_path + ": " + e.what());
    }
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["output_dir"] = *o.out;
  if (o.alpha) j["alpha"] = *o.alpha;
  if (o.p) j["p"] = *o.p;
  if (o.p1) {
    if (*o.p1 == "inf") {
      j["p1"] = "inf";
    } else {
      try {
        j["p1"] = std::stod(*o.p1);
      } catch (const std::exception&) {
        throw hardy::ConfigInvalid("--p1 must be a number or inf, got " + *o.p1);
      }
    }
  }
  if (o.t_min) j["t_min"] = *o.t_min;
  if (o.t_max) j["t_max"] = *o.t_max;
  if (o.t_steps) j["t_steps"] = *o.t_steps;
  if (o.kernel) j["kernel"] = *o.kernel;
  if (o.count) j["count"] = *o.count;
  if (o.dim) j["dim"] = *o.dim;
  return hardy::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calderón–Zygmund, Hardy space and BMO experiments on R^d x| R^+"};
  app.require_subcommand(1);
  Overrides o;
  for (const auto& name : hardy::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--dim", o.dim, "dimension d (1..3)");
    sub->add_option("--alpha", o.alpha, "stopping level alpha");
    sub->add_option("--p", o.p, "exponent p");
    sub->add_option("--p1", o.p1, "exponent p1 (a number or inf)");
    sub->add_option("--t-min", o.t_min);
    sub->add_option("--t-max", o.t_max);
    sub->add_option("--t-steps", o.t_steps);
    sub->add_option("--kernel", o.kernel, "zero, constant, radial-bump, exp-decay or jump");
    sub->add_option("--count", o.count, "number of random instances");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = load(o);
    const auto report = hardy::run(name, cfg);
    for (const auto& c : report.checks)
      std::printf("%s  %-44s measured %-12.6g bound %-12.6g (%zu)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.measured, c.bound, c.instances);
    for (const auto& path : hardy::write_artifacts(report, cfg.output_dir)) std::printf("wrote %s\n", path.c_str());
    std::printf("%s: %s in %.2f s on %d threads\n", name.c_str(), report.passed() ? "passed" : "FAILED",
                report.wall_time_s, hardy::thread_count());
    return report.passed() ? 0 : 1;
  } catch (const hardy::Error& e) {
    std::fprintf(stderr, "%s: %s: %s\n", name.c_str(), e.kind(), e.what());
    return 2;
  }
}
