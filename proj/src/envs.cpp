#include "appletaste/envs.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace appletaste {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

GaussianComponent::GaussianComponent(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw std::invalid_argument("GaussianComponent: mean/covariance dimensions disagree");
  }
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("GaussianComponent: covariance not positive definite");
  chol_ = llt.matrixL();
}

Vector GaussianComponent::sample(Rng& rng) const {
  std::normal_distribution<double> norm(0.0, 1.0);
  Vector z(mean_.size());
  for (auto& v : z) v = norm(rng);
  return mean_ + chol_ * z;
}

int ContextProcess::dim() const {
  return std::visit(overloaded{
                        [](const IidGaussian& p) { return p.component.dim(); },
                        [](const GaussianMixture& p) { return p.components.empty() ? 0 : p.components[0].dim(); },
                        [](const DriftingGaussian& p) { return static_cast<int>(p.mean_start.size()); },
                    },
                    kind);
}

void ContextProcess::validate() const {
  if (clip && !(*clip > 0.0)) throw std::invalid_argument("context clip must be positive");
  std::visit(overloaded{
                 [](const IidGaussian&) {},
                 [](const GaussianMixture& p) {
                   if (p.components.empty() || p.components.size() != p.weights.size()) {
                     throw std::invalid_argument("mixture: need one weight per component");
                   }
                   for (const auto& c : p.components) {
                     if (c.dim() != p.components[0].dim()) throw std::invalid_argument("mixture: component dims differ");
                   }
                   for (double w : p.weights) {
                     if (!(w >= 0.0)) throw std::invalid_argument("mixture: weights must be nonnegative");
                   }
                   const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
                   if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture: weights must sum to 1");
                 },
                 [](const DriftingGaussian& p) {
                   if (p.mean_start.size() != p.mean_end.size()) {
                     throw std::invalid_argument("drifting_gaussian: endpoint dims differ");
                   }
                   if (!(p.sd > 0.0)) throw std::invalid_argument("drifting_gaussian: sd must be positive");
                 },
             },
             kind);
  if (dim() < 1) throw std::invalid_argument("context process has no dimensions");
}

Vector ContextProcess::drift_mean(int t, int T) const {
  const auto* p = std::get_if<DriftingGaussian>(&kind);
  if (!p) throw std::logic_error("drift_mean: not a drifting process");
  const double frac = T > 1 ? static_cast<double>(t - 1) / static_cast<double>(T - 1) : 0.0;
  return p->mean_start + frac * (p->mean_end - p->mean_start);
}

Vector ContextProcess::sample(int t, int T, Rng& rng) const {
  Vector x = std::visit(overloaded{
                            [&](const IidGaussian& p) { return p.component.sample(rng); },
                            [&](const GaussianMixture& p) {
                              std::discrete_distribution<std::size_t> pick(p.weights.begin(), p.weights.end());
                              return p.components[pick(rng)].sample(rng);
                            },
                            [&](const DriftingGaussian& p) {
                              std::normal_distribution<double> norm(0.0, p.sd);
                              Vector v = drift_mean(t, T);
                              for (auto& e : v) e += norm(rng);
                              return v;
                            },
                        },
                        kind);
  if (clip) x = x.cwiseMax(-*clip).cwiseMin(*clip);
  return x;
}

void Environment::validate() const {
  game.validate();
  process.validate();
  if (theta_star.size() != game.d || process.dim() != game.d) {
    throw std::invalid_argument("Environment: theta*, context and game dimensions disagree");
  }
  if (!theta_star.allFinite()) throw std::invalid_argument("Environment: theta* must be finite");
}

void ProblemSpec::validate() const {
  game.validate();
  process.validate();
  if (process.dim() != game.d) throw std::invalid_argument("problem: context dimension differs from d");
  if (const auto* f = std::get_if<FixedTheta>(&theta_law); f && f->theta.size() != game.d) {
    throw std::invalid_argument("problem: fixed theta* has wrong dimension");
  }
  if (const auto* u = std::get_if<UniformTheta>(&theta_law)) {
    if (!(u->low <= u->high)) throw std::invalid_argument("problem: uniform theta* needs low <= high");
    if (!(u->zero_prob >= 0.0 && u->zero_prob <= 1.0)) throw std::invalid_argument("problem: zero_prob not in [0,1]");
  }
}

Vector ProblemSpec::draw_theta(Rng& rng) const {
  return std::visit(overloaded{
                        [](const FixedTheta& f) { return f.theta; },
                        [&](const UniformTheta& u) {
                          std::uniform_real_distribution<double> unif(0.0, 1.0);
                          Vector theta(game.d);
                          for (auto& v : theta) {
                            const double value = u.low + (u.high - u.low) * unif(rng);
                            v = (u.zero_prob > 0.0 && unif(rng) < u.zero_prob) ? 0.0 : value;
                          }
                          return theta;
                        },
                    },
                    theta_law);
}

Environment ProblemSpec::instantiate(Rng& rng) const { return instantiate_with(draw_theta(rng)); }

Environment ProblemSpec::instantiate_with(Vector theta_star) const {
  Environment env{std::move(theta_star), process, game};
  env.validate();
  return env;
}

ProblemSpec builtin_problem(const std::string& id, std::optional<int> dim, std::optional<int> horizon) {
  ProblemSpec spec;
  spec.id = id;
  if (id == "i" || id == "ii") {
    const bool first = id == "i";
    const int d = dim.value_or(first ? 5 : 20);
    if (d < 1) throw std::invalid_argument("builtin problem: dimension must be positive");
    spec.game = first ? GameSpec{0.4, 0.05, d, 500} : GameSpec{0.7, 0.1, d, 1000};
    spec.theta_law = UniformTheta{-1.0, 1.0, first ? 0.0 : 0.25};
    const double variance = first ? 1.0 : 8.0;
    spec.process.kind = IidGaussian{GaussianComponent(Vector::Zero(d), variance * Matrix::Identity(d, d))};
  } else if (id == "iii") {
    if (dim && *dim != 1) throw std::invalid_argument("builtin problem iii is one-dimensional");
    spec.game = GameSpec{1.0, 0.0, 1, 500};
    spec.theta_law = FixedTheta{Vector::Constant(1, 1.0)};
    spec.process.kind = DriftingGaussian{Vector::Constant(1, -0.1), Vector::Constant(1, 0.0), 0.025};
  } else {
    throw std::invalid_argument("unknown builtin problem '" + id + "' (expected i, ii or iii)");
  }
  if (horizon) spec.game.T = *horizon;
  spec.validate();
  return spec;
}

std::vector<std::string> builtin_problem_ids() { return {"i", "ii", "iii"}; }

std::string describe_problem(const std::string& id) {
  if (id == "i") return "d=5, theta*_j ~ U[-1,1], x ~ N(0, I), l01=0.4, l11=0.05, T=500";
  if (id == "ii") return "d=20, theta*_j ~ U[-1,1] w.p. 0.75 else 0, x ~ N(0, 8I), l01=0.7, l11=0.1, T=1000";
  if (id == "iii") return "d=1, theta*=1, x ~ N(mu_t, 0.025^2), mu_t from -0.1 to 0, l01=1, l11=0, T=500";
  throw std::invalid_argument("unknown builtin problem '" + id + "'");
}

Environment make_problem(const std::string& id, Rng& rng) { return builtin_problem(id).instantiate(rng); }

Vector sample_context(const Environment& env, int t, Rng& rng) {
  if (t < 1 || t > env.game.T) throw std::invalid_argument("sample_context: round outside [1, T]");
  return env.process.sample(t, env.game.T, rng);
}

int sample_class(const Environment& env, const Vector& x, Rng& rng) {
  if (x.size() != env.theta_star.size()) throw std::invalid_argument("sample_class: dimension mismatch");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < sigmoid(x.dot(env.theta_star)) ? 1 : 0;
}

std::vector<Round> generate_stream(const Environment& env, Rng& rng) {
  std::vector<Round> stream;
  stream.reserve(env.game.T);
  for (int t = 1; t <= env.game.T; ++t) {
    Round r;
    r.x = sample_context(env, t, rng);
    r.class1_prob = sigmoid(r.x.dot(env.theta_star));
    r.true_class = sample_class(env, r.x, rng);
    stream.push_back(std::move(r));
  }
  return stream;
}

}  // namespace appletaste
