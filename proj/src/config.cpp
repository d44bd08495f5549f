#include "appletaste/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace appletaste {
namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

// Walks a JSON object, collecting every problem instead of stopping at the first.
class Reader {
 public:
  Reader(const json& node, std::string path, std::vector<std::string>& issues)
      : node_(node), path_(std::move(path)), issues_(issues) {
    if (!node_.is_object()) fail("", "expected an object");
  }

  bool ok() const { return node_.is_object(); }
  bool has(const std::string& key) const { return ok() && node_.contains(key); }
  const json& at(const std::string& key) const { return node_.at(key); }
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& what) const {
    issues_.push_back((key.empty() ? (path_.empty() ? "<root>" : path_) : path(key)) + ": " + what);
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    if (!ok()) return;
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, _] : node_.items()) {
      if (!allowed.count(k)) fail(k, "unknown key");
    }
  }

  template <class T>
  std::optional<T> get(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "wrong type");
      return std::nullopt;
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) const {
    return get<T>(key).value_or(fallback);
  }

  std::optional<Vector> vector(const std::string& key) const {
    auto v = get<std::vector<double>>(key);
    if (!v) return std::nullopt;
    return Eigen::Map<const Vector>(v->data(), static_cast<Eigen::Index>(v->size()));
  }

  std::optional<Matrix> matrix(const std::string& key) const {
    auto rows = get<std::vector<std::vector<double>>>(key);
    if (!rows) return std::nullopt;
    const auto n = static_cast<Eigen::Index>(rows->size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>((*rows)[i].size()) != n) {
        fail(key, "matrix must be square");
        return std::nullopt;
      }
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = (*rows)[i][j];
    }
    return m;
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& issues_;
};

template <class F>
void guarded(std::vector<std::string>& issues, const std::string& where, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    issues.push_back(where + ": " + e.what());
  }
}

std::optional<GaussianComponent> parse_component(const Reader& r, int d, std::vector<std::string>& issues) {
  r.allow_only({"mean", "cov", "variance"});
  const Vector mean = r.vector("mean").value_or(Vector::Zero(d));
  std::optional<Matrix> cov = r.matrix("cov");
  if (cov && r.has("variance")) r.fail("variance", "give either cov or variance, not both");
  if (!cov) cov = r.get_or("variance", 1.0) * Matrix::Identity(mean.size(), mean.size());
  std::optional<GaussianComponent> out;
  guarded(issues, r.path(""), [&] { out.emplace(mean, *cov); });
  return out;
}

ContextProcess parse_contexts(const Reader& r, int d, std::vector<std::string>& issues) {
  ContextProcess proc;
  proc.kind = IidGaussian{GaussianComponent(Vector::Zero(d), Matrix::Identity(d, d))};
  const auto kind = r.get<std::string>("kind");
  if (!kind) {
    r.fail("kind", "missing (iid_gaussian | gaussian_mixture | drifting_gaussian)");
    return proc;
  }
  if (*kind == "iid_gaussian") {
    r.allow_only({"kind", "mean", "cov", "variance"});
    // Component keys live at this level.
    json sub = json::object();
    for (const char* k : {"mean", "cov", "variance"}) {
      if (r.has(k)) sub[k] = r.at(k);
    }
    if (auto c = parse_component(Reader(sub, r.path(""), issues), d, issues)) proc.kind = IidGaussian{*c};
  } else if (*kind == "gaussian_mixture") {
    r.allow_only({"kind", "components", "weights"});
    GaussianMixture mix;
    if (!r.has("components") || !r.at("components").is_array()) {
      r.fail("components", "expected an array");
    } else {
      const auto& comps = r.at("components");
      for (std::size_t i = 0; i < comps.size(); ++i) {
        if (auto c = parse_component(Reader(comps[i], r.path("components") + "[" + std::to_string(i) + "]", issues),
                                     d, issues)) {
          mix.components.push_back(*c);
        }
      }
    }
    mix.weights = r.get<std::vector<double>>("weights").value_or(std::vector<double>{});
    proc.kind = std::move(mix);
  } else if (*kind == "drifting_gaussian") {
    r.allow_only({"kind", "mean_start", "mean_end", "sd"});
    DriftingGaussian drift{Vector::Zero(d), Vector::Zero(d), 1.0};
    if (auto v = r.vector("mean_start")) drift.mean_start = *v;
    if (auto v = r.vector("mean_end")) drift.mean_end = *v;
    drift.sd = r.get_or("sd", 1.0);
    proc.kind = std::move(drift);
  } else {
    r.fail("kind", "unknown context process '" + *kind + "'");
  }
  return proc;
}

void parse_problem(const Reader& r, ExperimentConfig& cfg, std::vector<std::string>& issues) {
  if (!r.ok()) return;
  cfg.fixed_theta = r.get_or("fixed_theta", false);
  const auto clip = r.get<double>("clip");

  if (auto id = r.get<std::string>("builtin")) {
    r.allow_only({"builtin", "d", "T", "clip", "fixed_theta"});
    cfg.builtin = true;
    guarded(issues, r.path("builtin"), [&] { cfg.problem = builtin_problem(*id, r.get<int>("d"), r.get<int>("T")); });
  } else {
    r.allow_only({"d", "T", "l01", "l11", "theta", "contexts", "clip", "fixed_theta"});
    ProblemSpec& p = cfg.problem;
    p.id = "custom";
    for (const char* k : {"d", "T", "l01", "l11", "theta", "contexts"}) {
      if (!r.has(k)) r.fail(k, "missing");
    }
    p.game = GameSpec{r.get_or("l01", 0.4), r.get_or("l11", 0.05), r.get_or("d", 1), r.get_or("T", 1)};
    const int d = std::max(p.game.d, 1);
    p.theta_law = UniformTheta{};
    if (r.has("theta")) {
      Reader th(r.at("theta"), r.path("theta"), issues);
      th.allow_only({"fixed", "uniform"});
      if (auto fixed = th.vector("fixed")) {
        p.theta_law = FixedTheta{*fixed};
      } else if (th.has("uniform")) {
        Reader u(th.at("uniform"), th.path("uniform"), issues);
        u.allow_only({"low", "high", "zero_prob"});
        p.theta_law = UniformTheta{u.get_or("low", -1.0), u.get_or("high", 1.0), u.get_or("zero_prob", 0.0)};
      } else if (th.ok()) {
        th.fail("", "expected 'fixed' or 'uniform'");
      }
    }
    p.process.kind = IidGaussian{GaussianComponent(Vector::Zero(d), Matrix::Identity(d, d))};
    if (r.has("contexts")) p.process = parse_contexts(Reader(r.at("contexts"), r.path("contexts"), issues), d, issues);
  }
  if (clip) cfg.problem.process.clip = clip;
  guarded(issues, r.path(""), [&] { cfg.problem.validate(); });
}

std::optional<PolicyConfig> parse_policy(const Reader& r, std::vector<std::string>& issues) {
  if (!r.ok()) return std::nullopt;
  PolicyConfig p;
  p.name = r.get_or<std::string>("name", "");
  if (p.name.empty()) r.fail("name", "missing or empty");
  const auto type = r.get<std::string>("type");
  if (!type) {
    r.fail("type", "missing (pg_ts | pg_ids | epsilon_greedy | cbp_side)");
    return std::nullopt;
  }
  auto parse_prior = [&] {
    if (!r.has("prior")) return;
    Reader pr(r.at("prior"), r.path("prior"), issues);
    pr.allow_only({"mean", "cov", "variance"});
    p.prior.mean = pr.vector("mean");
    p.prior.cov = pr.matrix("cov");
    p.prior.variance = pr.get_or("variance", 1.0);
    if (!(p.prior.variance > 0.0)) pr.fail("variance", "must be positive");
  };
  auto parse_gibbs = [&] {
    p.M = r.get_or("M", p.M);
    p.truncate = r.get_or("truncate", p.truncate);
    p.radius = r.get_or("radius", p.radius);
    p.burn_in = r.get_or("burn_in", p.burn_in);
    if (p.M < 1) r.fail("M", "must be at least 1");
    if (p.burn_in < 0) r.fail("burn_in", "must be nonnegative");
    if (!(p.radius > 0.0)) r.fail("radius", "must be positive");
    parse_prior();
  };

  if (*type == "pg_ts") {
    p.kind = PolicyKind::kPgTs;
    r.allow_only({"name", "type", "M", "prior", "truncate", "radius", "burn_in"});
    parse_gibbs();
  } else if (*type == "pg_ids") {
    p.kind = PolicyKind::kPgIds;
    r.allow_only({"name", "type", "M", "prior", "truncate", "radius", "burn_in", "lambda", "variant"});
    parse_gibbs();
    p.lambda = r.get_or("lambda", p.lambda);
    if (!(p.lambda >= 0.0)) r.fail("lambda", "must be nonnegative");
    const auto variant = r.get_or<std::string>("variant", "tunable");
    if (variant == "tunable") {
      p.variant = IdsVariant::kTunable;
    } else if (variant == "traditional") {
      p.variant = IdsVariant::kTraditional;
    } else {
      r.fail("variant", "expected 'tunable' or 'traditional'");
    }
  } else if (*type == "epsilon_greedy") {
    p.kind = PolicyKind::kEpsilonGreedy;
    r.allow_only({"name", "type", "epsilon", "ridge"});
    p.epsilon = r.get_or("epsilon", p.epsilon);
    p.ridge = r.get_or("ridge", p.ridge);
    if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) r.fail("epsilon", "must lie in [0, 1]");
    if (!(p.ridge > 0.0)) r.fail("ridge", "must be positive");
  } else if (*type == "cbp_side") {
    p.kind = PolicyKind::kCbpSide;
    r.allow_only({"name", "type", "R", "C", "radius", "ridge", "design_ridge"});
    p.R = r.get_or("R", p.R);
    p.C = r.get<double>("C");
    p.radius = r.get_or("radius", p.radius);
    p.ridge = r.get_or("ridge", p.ridge);
    p.design_ridge = r.get_or("design_ridge", p.design_ridge);
    if (!(p.R > 0.0)) r.fail("R", "must be positive");
    if (p.C && !(*p.C >= 0.0)) r.fail("C", "must be nonnegative");
    if (!(p.radius > 0.0)) r.fail("radius", "must be positive");
    if (!(p.ridge > 0.0)) r.fail("ridge", "must be positive");
    if (!(p.design_ridge > 0.0)) r.fail("design_ridge", "must be positive");
  } else {
    r.fail("type", "unknown policy type '" + *type + "'");
    return std::nullopt;
  }
  return p;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error("invalid config: " + join(issues)), issues_(std::move(issues)) {}

GaussianPrior PriorConfig::build(int d) const {
  return GaussianPrior(mean.value_or(Vector::Zero(d)), cov.value_or(variance * Matrix::Identity(d, d)));
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kPgTs: return "pg_ts";
    case PolicyKind::kPgIds: return "pg_ids";
    case PolicyKind::kEpsilonGreedy: return "epsilon_greedy";
    case PolicyKind::kCbpSide: return "cbp_side";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  std::vector<std::string> issues;
  guarded(issues, "problem", [&] { problem.validate(); });
  if (reps < 1) issues.push_back("reps: must be at least 1");
  if (policies.empty()) issues.push_back("policies: at least one policy is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const auto where = "policies[" + std::to_string(i) + "]";
    if (!names.insert(policies[i].name).second) issues.push_back(where + ".name: duplicate '" + policies[i].name + "'");
    guarded(issues, where, [&] { make_policy(policies[i], problem.game); });
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  std::vector<std::string> issues;
  ExperimentConfig cfg;
  Reader root(doc, "", issues);
  root.allow_only({"problem", "policies", "reps", "seed", "output"});
  if (!root.ok()) throw ConfigError(std::move(issues));

  if (!root.has("problem")) {
    root.fail("problem", "missing");
  } else {
    parse_problem(Reader(root.at("problem"), "problem", issues), cfg, issues);
  }

  if (!root.has("policies") || !root.at("policies").is_array()) {
    root.fail("policies", "expected an array");
  } else {
    const auto& arr = root.at("policies");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (auto p = parse_policy(Reader(arr[i], "policies[" + std::to_string(i) + "]", issues), issues)) {
        cfg.policies.push_back(std::move(*p));
      }
    }
  }
  cfg.reps = root.get_or("reps", 1);
  cfg.seed = root.get_or<std::uint64_t>("seed", 0);
  cfg.output = root.get_or<std::string>("output", "");

  if (issues.empty()) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      issues.insert(issues.end(), e.issues().begin(), e.issues().end());
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open"});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(doc);
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& spec, const GameSpec& game) {
  GibbsOptions opts;
  opts.burn_in = spec.burn_in;
  opts.truncate = spec.truncate;
  opts.radius = spec.radius;
  switch (spec.kind) {
    case PolicyKind::kPgTs:
      return std::make_unique<PgTsPolicy>(spec.name, game, spec.prior.build(game.d), spec.M, opts);
    case PolicyKind::kPgIds:
      return std::make_unique<PgIdsPolicy>(spec.name, game, spec.prior.build(game.d), spec.M, spec.lambda,
                                           spec.variant, opts);
    case PolicyKind::kEpsilonGreedy:
      return std::make_unique<EpsilonGreedyPolicy>(spec.name, game, spec.epsilon, spec.ridge);
    case PolicyKind::kCbpSide: {
      auto consts = CbpSideConstants::for_bound(spec.R, spec.radius, spec.ridge);
      if (spec.C) consts.C = *spec.C;
      return std::make_unique<CbpSidePolicy>(spec.name, game, consts, spec.design_ridge);
    }
  }
  throw std::invalid_argument("make_policy: unknown policy kind");
}

}  // namespace appletaste
