#pragma once

// Episode loop, metrics, replicated experiments, parameter sweeps and the
// files they persist.
//
// Output layout for one experiment directory:
//   rounds.csv     rep,t,policy,action,true_class,expected_regret,cum_regret
//   quantiles.csv  policy,t,q05,median,q95      (cumulative regret across reps)
//   summary.json   per-policy final-regret quantiles, precision/recall means, runtime

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appletaste/config.hpp"
#include "appletaste/core.hpp"
#include "appletaste/envs.hpp"
#include "appletaste/policies.hpp"

namespace appletaste {

struct TrajectoryRow {
  int t = 0;
  Action action = Action::kZero;
  int true_class = 0;
  double class1_prob = 0.0;
  double expected_regret = 0.0;
  double cum_regret = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  std::uint64_t stream_hash = 0;  // fingerprint of the (x_t, C_t) stream the policy saw

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

struct Metrics {
  std::optional<double> precision;  // absent when action 1 was never played
  std::optional<double> recall;     // absent when no class-1 items arrived
};

// splitmix64-based seed derivation: independent streams per replication and
// per (replication, policy name).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep, const std::string& policy);

std::uint64_t hash_stream(std::span<const Round> stream);

// Plays the policy over a pre-drawn stream. The policy must be freshly reset.
Trajectory run_on_stream(std::span<const Round> stream, const GameSpec& game, Policy& policy);
// Draws the stream from `seed` and plays the policy over it.
Trajectory run_episode(const Environment& env, Policy& policy, std::uint64_t seed);

Metrics compute_metrics(const Trajectory& traj);

// Type-7 (linear interpolation) sample quantile; q in [0, 1].
double quantile(std::vector<double> values, double q);

struct PolicySummary {
  std::string name;
  std::vector<double> q05, median, q95;  // cumulative regret curves over t = 1..T
  std::vector<double> final_regrets;     // one per replication
  double final_regret_median = 0.0;
  double final_regret_q05 = 0.0;
  double final_regret_q95 = 0.0;
  double final_regret_mean = 0.0;
  std::optional<double> precision_mean;
  std::optional<double> recall_mean;
  double runtime_seconds = 0.0;
};

struct Summary {
  std::vector<PolicySummary> policies;
  const PolicySummary& at(const std::string& name) const;
};

struct ReplicationResult {
  Vector theta_star;
  std::uint64_t stream_hash = 0;
  std::vector<Trajectory> trajectories;  // in config policy order
  std::vector<double> runtimes;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationResult> reps;
  Summary summary;
};

struct RunOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

// Runs every policy on a shared stream per replication and aggregates.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts = {});
Summary summarize(const ExperimentConfig& config, const std::vector<ReplicationResult>& reps);

void write_rounds_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_quantiles_csv(const Summary& summary, const std::filesystem::path& path);
void write_summary_json(const ExperimentResult& result, const std::filesystem::path& path);
// rounds.csv, quantiles.csv and summary.json under dir.
void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

// Recomputes the quantile curves from a persisted rounds.csv.
std::map<std::string, PolicySummary> summarize_rounds_csv(const std::filesystem::path& path);

enum class SweepAxis { kDimension, kGibbsM, kLambda };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

// The tuning grid {0, 0.05, ..., 0.45}.
std::vector<double> lambda_grid();

// Copy of config with the axis set to value (dimension: builtin Gaussian
// problems only; M: every PG policy; lambda: every PG-IDS policy).
ExperimentConfig apply_axis(const ExperimentConfig& config, SweepAxis axis, double value);

struct SweepRow {
  SweepAxis axis = SweepAxis::kGibbsM;
  double value = 0.0;
  std::string policy;
  double final_regret_mean = 0.0;
  double final_regret_median = 0.0;
  double final_regret_q05 = 0.0;
  double final_regret_q95 = 0.0;
  std::optional<double> scaled_mean;  // mean / sqrt(d), dimension sweeps only
};

// Runs one experiment per value; when out_dir is set each run is persisted
// under out_dir/<axis>=<value>/ and the table to out_dir/sweep.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const double> values,
                            const std::optional<std::filesystem::path>& out_dir = {}, const RunOptions& opts = {});
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace appletaste
