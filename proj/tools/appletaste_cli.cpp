// Command-line front end for the apple-tasting experiment harness.
//
//   appletaste run --config <path> --out <dir> [--seed N] [--reps N]
//   appletaste sweep --config <path> --axis d|M|lambda --values 2,5,10 --out <dir>
//   appletaste list-problems
//   appletaste validate --config <path>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "appletaste/config.hpp"
#include "appletaste/envs.hpp"
#include "appletaste/harness.hpp"

namespace {

using namespace appletaste;

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "-"; }

void print_summary(const Summary& summary) {
  fmt::print("{:<20} {:>12} {:>10} {:>10} {:>9} {:>9} {:>9}\n", "policy", "median", "q05", "q95", "precision",
             "recall", "seconds");
  for (const auto& p : summary.policies) {
    fmt::print("{:<20} {:>12.3f} {:>10.3f} {:>10.3f} {:>9} {:>9} {:>9.2f}\n", p.name, p.final_regret_median,
               p.final_regret_q05, p.final_regret_q95, fmt_opt(p.precision_mean), fmt_opt(p.recall_mean),
               p.runtime_seconds);
  }
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto token = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!token.empty()) values.push_back(std::stod(token));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (values.empty()) throw std::invalid_argument("--values: empty list");
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian and baseline policies for logistic contextual apple tasting"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis_name, values_list;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Run an experiment and persist its artifacts");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (defaults to the config's output)");
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--reps", reps, "Override the number of replications")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* sw = app.add_subcommand("sweep", "Run the experiment for each value of one axis");
  sw->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis_name, "d, M or lambda")->required();
  sw->add_option("--values", values_list, "Comma-separated values; 'grid' for the lambda grid")->required();
  sw->add_option("--out", out_dir, "Output directory")->required();
  sw->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* list = app.add_subcommand("list-problems", "Describe the builtin problems");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& id : builtin_problem_ids()) fmt::print("{:<4} {}\n", id, describe_problem(id));
      return EXIT_SUCCESS;
    }

    auto config = load_config(config_path);

    if (*validate) {
      fmt::print("{}: ok ({} policies, {} reps, problem {}, d={}, T={})\n", config_path, config.policies.size(),
                 config.reps, config.problem.id, config.problem.game.d, config.problem.game.T);
      return EXIT_SUCCESS;
    }

    if (seed) config.seed = *seed;
    if (reps) config.reps = *reps;
    const RunOptions opts{threads};

    if (*run) {
      const std::string dir = out_dir.empty() ? config.output : out_dir;
      if (dir.empty()) throw std::invalid_argument("no output directory: pass --out or set 'output'");
      const auto result = run_experiment(config, opts);
      write_artifacts(result, dir);
      print_summary(result.summary);
      fmt::print("wrote {}\n", dir);
      return EXIT_SUCCESS;
    }

    if (*sw) {
      const auto axis = parse_sweep_axis(axis_name);
      const auto values = values_list == "grid" ? lambda_grid() : parse_values(values_list);
      const auto rows = sweep(config, axis, values, std::filesystem::path(out_dir), opts);
      fmt::print("{:<8} {:>8} {:<20} {:>12} {:>12} {:>12}\n", "axis", "value", "policy", "mean", "median",
                 "mean/sqrt(d)");
      for (const auto& r : rows) {
        fmt::print("{:<8} {:>8} {:<20} {:>12.3f} {:>12.3f} {:>12}\n", to_string(r.axis), r.value, r.policy,
                   r.final_regret_mean, r.final_regret_median,
                   r.scaled_mean ? fmt::format("{:.3f}", *r.scaled_mean) : "-");
      }
      fmt::print("wrote {}/sweep.csv\n", out_dir);
      return EXIT_SUCCESS;
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid config:\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
