#pragma once

// Experiment configuration: parsing and validation of the JSON document
//
//   {
//     "problem":  {"builtin": "i"} | {custom problem},
//     "policies": [{"name": ..., "type": "pg_ts" | "pg_ids" | "epsilon_greedy" | "cbp_side", ...}],
//     "reps": 50,
//     "seed": 1,
//     "output": "out/problem_i"
//   }
//
// Unknown keys are rejected at every level.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "appletaste/envs.hpp"
#include "appletaste/inference.hpp"
#include "appletaste/policies.hpp"

namespace appletaste {

// Carries every offending field found while validating a config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct PriorConfig {
  std::optional<Vector> mean;
  std::optional<Matrix> cov;
  double variance = 1.0;  // used for whichever of mean/cov is absent: zero mean, variance * I

  GaussianPrior build(int d) const;
};

enum class PolicyKind { kPgTs, kPgIds, kEpsilonGreedy, kCbpSide };

struct PolicyConfig {
  std::string name;
  PolicyKind kind = PolicyKind::kPgTs;
  // PG-TS / PG-IDS
  int M = 15;
  PriorConfig prior;
  bool truncate = false;
  double radius = 1.0;
  int burn_in = 0;
  double lambda = 0.05;
  IdsVariant variant = IdsVariant::kTunable;
  // epsilon-greedy / CBP-SIDE
  double epsilon = 0.1;
  double ridge = kDefaultRidge;
  double R = 1.0;
  std::optional<double> C;
  double design_ridge = 1e-3;
};

struct ExperimentConfig {
  ProblemSpec problem;
  bool builtin = false;
  bool fixed_theta = false;  // draw theta* once and share it across replications
  std::vector<PolicyConfig> policies;
  int reps = 1;
  std::uint64_t seed = 0;
  std::string output;

  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

std::unique_ptr<Policy> make_policy(const PolicyConfig& spec, const GameSpec& game);

std::string to_string(PolicyKind kind);

}  // namespace appletaste
