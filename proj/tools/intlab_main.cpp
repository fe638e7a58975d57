// intlab experiment runner: one subcommand per construction, flat key-value
// configs, CSV/JSON data files and an invariant-drift report. Exit code 0
// iff every invariant row passes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "intlab/experiments.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::string format = "text";
  double tol = 0.0;
  long long steps = -1;
  long long seed = -1;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file");
  cmd->add_option("--output", opts.output_dir, "output directory");
  cmd->add_option("--format", opts.format, "report format: csv|json|text")
      ->check(CLI::IsMember({"csv", "json", "text"}));
  cmd->add_option("--tol", opts.tol, "override the primary tolerance");
  cmd->add_option("--steps", opts.steps, "override the step/iteration count");
  cmd->add_option("--seed", opts.seed, "seed for randomized runs (default 0)");
  cmd->add_option("--jobs", opts.jobs, "concurrent experiments (batch runs)");
}

intlab::ExperimentConfig load_config(const CommonOpts& opts,
                                     const std::string& experiment) {
  intlab::ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw intlab::ConfigError("cannot open '" + opts.config_path + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    cfg = intlab::ExperimentConfig::parse(text);
  }
  if (cfg.has("experiment") && cfg.get_string("experiment") != experiment)
    throw intlab::ConfigError("config is for experiment '" +
                              cfg.get_string("experiment") + "', not '" +
                              experiment + "'");
  cfg.set("experiment", experiment);
  if (opts.tol > 0.0) cfg.set("tol", intlab::format_double(opts.tol));
  if (opts.steps >= 0) cfg.set("steps", std::to_string(opts.steps));
  if (opts.seed >= 0) cfg.set("seed", std::to_string(opts.seed));
  return cfg;
}

int run_one(const std::string& experiment, const CommonOpts& opts) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();

  const intlab::ExperimentConfig cfg = load_config(opts, experiment);
  intlab::experiments::RunOutput out =
      intlab::experiments::run_experiment(experiment, cfg);
  out.report.config_hash = cfg.hash();
  out.report.wall_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

  // all validation is done; only now touch the filesystem
  const fs::path dir(opts.output_dir);
  fs::create_directories(dir);
  for (const auto& [name, content] : out.data_files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
  }
  {
    std::ofstream f(dir / "report.json", std::ios::binary);
    f << intlab::render_json(out.report);
  }
  std::cout << intlab::render_report(out.report, opts.format);
  return out.report.pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"integrable-systems experiment runner"};
  app.require_subcommand(1);

  const std::vector<std::string> experiments = {
      "oscillator", "euler-top",          "tshift",
      "catmap",     "bachet",             "geodesic",
      "knoerrer",   "neumann",            "geodesic-equivalence",
      "projective-chart"};

  std::map<std::string, CommonOpts> opts;
  for (const auto& name : experiments) {
    CLI::App* cmd = app.add_subcommand(name, "run the " + name + " experiment");
    add_common(cmd, opts[name]);
  }
  CLI::App* all = app.add_subcommand("all", "run every experiment with defaults");
  add_common(all, opts["all"]);

  CLI11_PARSE(app, argc, argv);

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name != "all") return run_one(name, opts[name]);

    // batch mode; experiments are independent, so --jobs N fans them out
    const CommonOpts& base = opts["all"];
    std::vector<std::pair<std::string, std::future<int>>> futures;
    int rc = 0;
    const int jobs = std::max(1, base.jobs);
    for (std::size_t at = 0; at < experiments.size();) {
      futures.clear();
      for (int j = 0; j < jobs && at < experiments.size(); ++j, ++at) {
        const std::string& name2 = experiments[at];
        CommonOpts o = base;
        o.output_dir = (fs::path(base.output_dir) / name2).string();
        futures.emplace_back(name2, std::async(std::launch::async, run_one,
                                               name2, o));
      }
      for (auto& [n, f] : futures) rc |= f.get();
    }
    return rc;
  } catch (const intlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
