#include "appletaste/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/os.h>
#include <nlohmann/json.hpp>

namespace appletaste {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

// Seed for the theta* shared across replications when fixed_theta is set.
constexpr std::uint64_t kSharedThetaStream = ~std::uint64_t{0};

ReplicationResult run_replication(const ExperimentConfig& config, int rep, const std::optional<Vector>& shared_theta) {
  Rng env_rng(derive_seed(config.seed, static_cast<std::uint64_t>(rep)));
  ReplicationResult out;
  out.theta_star = shared_theta ? *shared_theta : config.problem.draw_theta(env_rng);
  const Environment env = config.problem.instantiate_with(out.theta_star);
  const auto stream = generate_stream(env, env_rng);
  out.stream_hash = hash_stream(stream);

  for (const auto& spec : config.policies) {
    auto policy = make_policy(spec, config.problem.game);
    policy->reset(derive_seed(config.seed, static_cast<std::uint64_t>(rep), spec.name));
    const auto start = std::chrono::steady_clock::now();
    out.trajectories.push_back(run_on_stream(stream, env.game, *policy));
    out.runtimes.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return out;
}

std::optional<double> mean_of_present(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep) {
  return splitmix64(splitmix64(master) ^ splitmix64(rep + 0x51ED270B27EC4F6BULL));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep, const std::string& policy) {
  return splitmix64(derive_seed(master, rep) ^ fnv1a(policy.data(), policy.size()));
}

std::uint64_t hash_stream(std::span<const Round> stream) {
  std::uint64_t h = kFnvOffset;
  for (const auto& r : stream) {
    h = fnv1a(r.x.data(), sizeof(double) * static_cast<std::size_t>(r.x.size()), h);
    h = fnv1a(&r.true_class, sizeof r.true_class, h);
  }
  return h;
}

Trajectory run_on_stream(std::span<const Round> stream, const GameSpec& game, Policy& policy) {
  Trajectory traj;
  traj.stream_hash = hash_stream(stream);
  traj.rows.reserve(stream.size());
  double cum = 0.0;
  int t = 0;
  for (const auto& round : stream) {
    ++t;
    Action a;
    try {
      a = policy.select(round.x);
      policy.update(round.x, a, feedback(a, round.true_class, game));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("policy '{}' failed in round {}: {}", policy.name(), t, e.what()));
    }
    const double regret = action_gap(a, round.class1_prob, game);
    cum += regret;
    traj.rows.push_back({t, a, round.true_class, round.class1_prob, regret, cum});
  }
  return traj;
}

Trajectory run_episode(const Environment& env, Policy& policy, std::uint64_t seed) {
  Rng rng(seed);
  const auto stream = generate_stream(env, rng);
  return run_on_stream(stream, env.game, policy);
}

Metrics compute_metrics(const Trajectory& traj) {
  if (traj.rows.empty()) throw std::invalid_argument("compute_metrics: empty trajectory");
  int played_one = 0, class_one = 0, hits = 0;
  for (const auto& r : traj.rows) {
    const bool a1 = r.action == Action::kOne;
    played_one += a1;
    class_one += r.true_class == 1;
    hits += a1 && r.true_class == 1;
  }
  Metrics m;
  if (played_one > 0) m.precision = static_cast<double>(hits) / played_one;
  if (class_one > 0) m.recall = static_cast<double>(hits) / class_one;
  return m;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const PolicySummary& Summary::at(const std::string& name) const {
  for (const auto& p : policies) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("Summary: no policy named '" + name + "'");
}

Summary summarize(const ExperimentConfig& config, const std::vector<ReplicationResult>& reps) {
  Summary summary;
  const int T = config.problem.game.T;
  for (std::size_t k = 0; k < config.policies.size(); ++k) {
    PolicySummary ps;
    ps.name = config.policies[k].name;
    ps.q05.resize(T);
    ps.median.resize(T);
    ps.q95.resize(T);
    std::vector<double> at_t(reps.size());
    for (int t = 0; t < T; ++t) {
      for (std::size_t r = 0; r < reps.size(); ++r) at_t[r] = reps[r].trajectories[k].rows[t].cum_regret;
      ps.q05[t] = quantile(at_t, 0.05);
      ps.median[t] = quantile(at_t, 0.5);
      ps.q95[t] = quantile(at_t, 0.95);
    }
    std::vector<std::optional<double>> precisions, recalls;
    for (const auto& rep : reps) {
      ps.final_regrets.push_back(rep.trajectories[k].final_regret());
      const auto m = compute_metrics(rep.trajectories[k]);
      precisions.push_back(m.precision);
      recalls.push_back(m.recall);
      ps.runtime_seconds += rep.runtimes[k];
    }
    ps.final_regret_median = quantile(ps.final_regrets, 0.5);
    ps.final_regret_q05 = quantile(ps.final_regrets, 0.05);
    ps.final_regret_q95 = quantile(ps.final_regrets, 0.95);
    double sum = 0.0;
    for (double v : ps.final_regrets) sum += v;
    ps.final_regret_mean = sum / static_cast<double>(ps.final_regrets.size());
    ps.precision_mean = mean_of_present(precisions);
    ps.recall_mean = mean_of_present(recalls);
    summary.policies.push_back(std::move(ps));
  }
  return summary;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.reps.resize(config.reps);

  std::optional<Vector> shared_theta;
  if (config.fixed_theta) {
    Rng rng(derive_seed(config.seed, kSharedThetaStream));
    shared_theta = config.problem.draw_theta(rng);
  }

  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.reps));

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned id) {
    try {
      for (int r = next++; r < config.reps; r = next++) {
        result.reps[r] = run_replication(config, r, shared_theta);
      }
    } catch (...) {
      errors[id] = std::current_exception();
      next = config.reps;
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work, i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  result.summary = summarize(config, result.reps);
  return result;
}

void write_rounds_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  ensure_parent(path);
  auto out = fmt::output_file(path.string());
  out.print("rep,t,policy,action,true_class,expected_regret,cum_regret\n");
  for (std::size_t r = 0; r < result.reps.size(); ++r) {
    for (std::size_t k = 0; k < result.config.policies.size(); ++k) {
      const auto& name = result.config.policies[k].name;
      for (const auto& row : result.reps[r].trajectories[k].rows) {
        out.print("{},{},{},{},{},{},{}\n", r, row.t, name, to_int(row.action), row.true_class, row.expected_regret,
                  row.cum_regret);
      }
    }
  }
}

void write_quantiles_csv(const Summary& summary, const std::filesystem::path& path) {
  ensure_parent(path);
  auto out = fmt::output_file(path.string());
  out.print("policy,t,q05,median,q95\n");
  for (const auto& p : summary.policies) {
    for (std::size_t t = 0; t < p.median.size(); ++t) {
      out.print("{},{},{},{},{}\n", p.name, t + 1, p.q05[t], p.median[t], p.q95[t]);
    }
  }
}

void write_summary_json(const ExperimentResult& result, const std::filesystem::path& path) {
  ensure_parent(path);
  const auto& cfg = result.config;
  nlohmann::ordered_json doc;
  doc["problem"] = cfg.problem.id;
  doc["d"] = cfg.problem.game.d;
  doc["T"] = cfg.problem.game.T;
  doc["reps"] = cfg.reps;
  doc["seed"] = cfg.seed;
  nlohmann::ordered_json policies = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < result.summary.policies.size(); ++k) {
    const auto& p = result.summary.policies[k];
    nlohmann::ordered_json entry;
    entry["type"] = to_string(cfg.policies[k].kind);
    entry["final_regret_median"] = p.final_regret_median;
    entry["final_regret_q05"] = p.final_regret_q05;
    entry["final_regret_q95"] = p.final_regret_q95;
    entry["final_regret_mean"] = p.final_regret_mean;
    entry["precision_mean"] = optional_json(p.precision_mean);
    entry["recall_mean"] = optional_json(p.recall_mean);
    entry["runtime_seconds"] = p.runtime_seconds;
    policies[p.name] = std::move(entry);
  }
  doc["policies"] = std::move(policies);
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_rounds_csv(result, dir / "rounds.csv");
  write_quantiles_csv(result.summary, dir / "quantiles.csv");
  write_summary_json(result, dir / "summary.json");
}

std::map<std::string, PolicySummary> summarize_rounds_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "rep,t,policy,action,true_class,expected_regret,cum_regret") {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  // policy -> t -> cumulative regret per rep
  std::map<std::string, std::vector<std::vector<double>>> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 7) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    const auto t = static_cast<std::size_t>(std::stoul(fields[1]));
    auto& per_t = curves[fields[2]];
    if (per_t.size() < t) per_t.resize(t);
    per_t[t - 1].push_back(std::stod(fields[6]));
  }
  std::map<std::string, PolicySummary> out;
  for (auto& [name, per_t] : curves) {
    PolicySummary ps;
    ps.name = name;
    for (const auto& values : per_t) {
      ps.q05.push_back(quantile(values, 0.05));
      ps.median.push_back(quantile(values, 0.5));
      ps.q95.push_back(quantile(values, 0.95));
    }
    ps.final_regrets = per_t.back();
    ps.final_regret_median = ps.median.back();
    ps.final_regret_q05 = ps.q05.back();
    ps.final_regret_q95 = ps.q95.back();
    out.emplace(name, std::move(ps));
  }
  return out;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "d" || name == "dimension") return SweepAxis::kDimension;
  if (name == "M" || name == "gibbs_M") return SweepAxis::kGibbsM;
  if (name == "lambda") return SweepAxis::kLambda;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (expected d, M or lambda)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kDimension: return "d";
    case SweepAxis::kGibbsM: return "M";
    case SweepAxis::kLambda: return "lambda";
  }
  return "unknown";
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(0.05 * i);
  return grid;
}

ExperimentConfig apply_axis(const ExperimentConfig& config, SweepAxis axis, double value) {
  ExperimentConfig out = config;
  auto as_count = [&](const char* what) {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw std::invalid_argument(fmt::format("sweep: {} must be a positive integer, got {}", what, value));
    }
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::kDimension: {
      const int d = as_count("d");
      if (!config.builtin || (config.problem.id != "i" && config.problem.id != "ii")) {
        throw std::invalid_argument("sweep: the d axis needs builtin problem i or ii");
      }
      const auto clip = config.problem.process.clip;
      out.problem = builtin_problem(config.problem.id, d, config.problem.game.T);
      out.problem.process.clip = clip;
      break;
    }
    case SweepAxis::kGibbsM: {
      const int M = as_count("M");
      for (auto& p : out.policies) {
        if (p.kind == PolicyKind::kPgTs || p.kind == PolicyKind::kPgIds) p.M = M;
      }
      break;
    }
    case SweepAxis::kLambda:
      if (!(value >= 0.0)) throw std::invalid_argument("sweep: lambda must be nonnegative");
      for (auto& p : out.policies) {
        if (p.kind == PolicyKind::kPgIds) p.lambda = value;
      }
      break;
  }
  out.validate();
  return out;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const double> values,
                            const std::optional<std::filesystem::path>& out_dir, const RunOptions& opts) {
  std::vector<SweepRow> rows;
  for (double value : values) {
    const auto cfg = apply_axis(config, axis, value);
    const auto result = run_experiment(cfg, opts);
    if (out_dir) write_artifacts(result, *out_dir / fmt::format("{}={}", to_string(axis), value));
    for (const auto& p : result.summary.policies) {
      SweepRow row;
      row.axis = axis;
      row.value = value;
      row.policy = p.name;
      row.final_regret_mean = p.final_regret_mean;
      row.final_regret_median = p.final_regret_median;
      row.final_regret_q05 = p.final_regret_q05;
      row.final_regret_q95 = p.final_regret_q95;
      if (axis == SweepAxis::kDimension) row.scaled_mean = p.final_regret_mean / std::sqrt(value);
      rows.push_back(std::move(row));
    }
  }
  if (out_dir) write_sweep_csv(rows, *out_dir / "sweep.csv");
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
  ensure_parent(path);
  auto out = fmt::output_file(path.string());
  out.print("axis,value,policy,final_regret_mean,final_regret_median,final_regret_q05,final_regret_q95,"
            "mean_over_sqrt_d\n");
  for (const auto& r : rows) {
    out.print("{},{},{},{},{},{},{},{}\n", to_string(r.axis), r.value, r.policy, r.final_regret_mean,
              r.final_regret_median, r.final_regret_q05, r.final_regret_q95,
              r.scaled_mean ? fmt::format("{}", *r.scaled_mean) : std::string());
  }
}

}  // namespace appletaste
