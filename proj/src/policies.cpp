#include "appletaste/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace appletaste {
namespace {

double log_sum_exp(const Eigen::ArrayXd& v) {
  const double shift = v.maxCoeff();
  if (!std::isfinite(shift)) return shift;
  return shift + std::log((v - shift).exp().sum());
}

}  // namespace

double likelihood_term(const Vector& x, const Vector& theta, int c) {
  const double p = sigmoid(x.dot(theta));
  return c == 1 ? p : 1.0 - p;
}

IdsEstimates ids_estimates(std::span<const Vector> samples, const Vector& x, const GameSpec& g,
                           const Dataset& data) {
  const auto M = static_cast<Eigen::Index>(samples.size());
  if (M < 1) throw std::invalid_argument("ids_estimates: need at least one sample");

  Matrix thetas(x.size(), M);
  for (Eigen::Index m = 0; m < M; ++m) thetas.col(m) = samples[m];

  // Regret of each action averaged over the samples.
  const Eigen::ArrayXd z_now = (x.transpose() * thetas).transpose().array();
  IdsEstimates est;
  for (Eigen::Index m = 0; m < M; ++m) {
    const double p = sigmoid(z_now[m]);
    est.delta0 += action_gap(Action::kZero, p, g);
    est.delta1 += action_gap(Action::kOne, p, g);
  }
  est.delta0 /= static_cast<double>(M);
  est.delta1 /= static_cast<double>(M);

  // Log likelihood of the revealed data under each sample.
  Eigen::ArrayXd log_lik = Eigen::ArrayXd::Zero(M);
  if (!data.empty()) {
    const Matrix z = data.features() * thetas;  // N x M
    const auto c = data.classes();
    for (Eigen::Index m = 0; m < M; ++m) {
      double s = 0.0;
      for (int i = 0; i < data.size(); ++i) s += c[i] > 0.5 ? log_sigmoid(z(i, m)) : log_sigmoid(-z(i, m));
      log_lik[m] = s;
    }
  }

  Eigen::ArrayXd log_l1(M), log_l0(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    log_l1[m] = log_sigmoid(z_now[m]);
    log_l0[m] = log_sigmoid(-z_now[m]);
  }
  const double log_m = std::log(static_cast<double>(M));
  const double log_norm = log_sum_exp(log_lik) - log_m;
  const double log_norm1 = log_sum_exp(log_lik + log_l1) - log_m;
  const double log_norm0 = log_sum_exp(log_lik + log_l0) - log_m;

  const double kl1 = (log_norm1 - log_norm - log_l1).mean();
  const double kl0 = (log_norm0 - log_norm - log_l0).mean();
  est.info_raw = kl1 * log_l1.exp().mean() + kl0 * log_l0.exp().mean();
  est.info1 = std::max(est.info_raw, 0.0);
  return est;
}

double ids_prob_traditional(double delta0, double delta1) {
  const double gap = std::fabs(delta1 - delta0);
  if (gap == 0.0) return 1.0;
  return std::min(1.0, delta0 / gap);
}

double ids_prob_tunable(double delta0, double delta1, double info1, double lambda) {
  const double gap = delta1 - delta0;
  if (gap == 0.0) return 1.0;
  const double p = lambda * info1 / (2.0 * gap * gap) - delta0 / gap;
  return std::clamp(p, 0.0, 1.0);
}

Action pgts_select(GibbsChain& chain, const GaussianPrior& prior, const Dataset& data, const Vector& x,
                   const GameSpec& g, Rng& rng, const GibbsOptions& opts) {
  if (!chain.initialized()) throw std::logic_error("pgts_select: chain not initialised");
  auto draws = gibbs(prior, chain.M, data, *chain.last_theta, rng, opts);
  chain.last_theta = std::move(draws.back());
  return optimal_action(*chain.last_theta, x, g);
}

IdsDecision pgids_decide(GibbsChain& chain, const GaussianPrior& prior, const Dataset& data, const Vector& x,
                         const GameSpec& g, double lambda, IdsVariant variant, Rng& rng,
                         const GibbsOptions& opts) {
  if (!chain.initialized()) throw std::logic_error("pgids_select: chain not initialised");
  if (!(lambda >= 0.0)) throw std::invalid_argument("pgids_select: lambda must be nonnegative");
  const auto draws = gibbs(prior, chain.M, data, *chain.last_theta, rng, opts);
  chain.last_theta = draws.back();

  IdsDecision out;
  out.estimates = ids_estimates(draws, x, g, data);
  const auto& e = out.estimates;
  out.prob_one = variant == IdsVariant::kTunable ? ids_prob_tunable(e.delta0, e.delta1, e.info1, lambda)
                                                 : ids_prob_traditional(e.delta0, e.delta1);
  std::bernoulli_distribution coin(out.prob_one);
  out.action = coin(rng) ? Action::kOne : Action::kZero;
  return out;
}

Action pgids_select(GibbsChain& chain, const GaussianPrior& prior, const Dataset& data, const Vector& x,
                    const GameSpec& g, double lambda, IdsVariant variant, Rng& rng, const GibbsOptions& opts) {
  return pgids_decide(chain, prior, data, x, g, lambda, variant, rng, opts).action;
}

Action epsilon_greedy_select(const Dataset& data, const Vector& x, const GameSpec& g, double epsilon, Rng& rng,
                             double ridge, std::optional<Vector>* estimate) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon_greedy_select: epsilon not in [0,1]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (unif(rng) < epsilon) {
    return unif(rng) < 0.5 ? Action::kZero : Action::kOne;
  }
  auto fit = fit_penalized_mle(data, ridge, estimate ? *estimate : std::optional<Vector>{});
  if (estimate) *estimate = fit.theta;
  return optimal_action(fit.theta, x, g);
}

CbpSideConstants CbpSideConstants::for_bound(double R, double radius, double ridge) {
  return {R, cbp_curvature_constant(R, radius), radius, ridge};
}

double cbp_curvature_constant(double R, double radius) {
  const double s = sigmoid(R * radius);
  return 1.0 / (s * (1.0 - s));
}

double confidence_width(const Vector& x, const Matrix& V, int N, int d, double R, double C) {
  Eigen::LLT<Matrix> llt(V);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("confidence_width: V is not positive definite");
  const double quad = x.dot(llt.solve(x));
  const double n = static_cast<double>(std::max(N, 1));
  const double log_inv_delta = 2.0 * std::log(n);
  const double radius = std::sqrt(2.0 * d * (1.0 + N * R * R / d) + 2.0 * log_inv_delta) + R * d;
  return C * radius * std::sqrt(quad);
}

double cbp_regret_term(const Vector& theta_hat, const Vector& x, const GameSpec& g) {
  return (1.0 + g.l01 - g.l11) * sigmoid(x.dot(theta_hat)) - 1.0;
}

double cbp_confidence_term(double width, const GameSpec& g) { return (1.0 + g.l01 - g.l11) * width; }

Action cbp_side_rule(double regret_term, double confidence_term) {
  return regret_term <= -confidence_term ? Action::kZero : Action::kOne;
}

Action cbp_side_select(const Dataset& data, const Matrix& V, const Vector& x, const GameSpec& g,
                       const CbpSideConstants& consts, std::optional<Vector>* estimate) {
  const Vector mle = fit_penalized_mle(data, consts.ridge, estimate ? *estimate : std::optional<Vector>{}).theta;
  if (estimate) *estimate = mle;
  const Vector theta_hat = project_to_ellipsoid(mle, V, consts.radius);
  const double width = confidence_width(x, V, data.size(), static_cast<int>(x.size()), consts.R, consts.C);
  return cbp_side_rule(cbp_regret_term(theta_hat, x, g), cbp_confidence_term(width, g));
}

// ---------------------------------------------------------------------------

Policy::Policy(std::string name, GameSpec game) : name_(std::move(name)), game_(game), data_(game.d) {
  game_.validate();
}

void Policy::reset(std::uint64_t seed) {
  data_.clear();
  rng_.seed(seed);
  on_reset();
}

void Policy::update(const Vector& x, Action a, const Feedback& fb) {
  if ((a == Action::kOne) != fb.revealed()) {
    throw std::logic_error("Policy::update: feedback must be present exactly when action 1 is played");
  }
  if (!fb.revealed()) return;
  data_.add(x, fb.revealed_class());
  on_observe(x);
}

PgTsPolicy::PgTsPolicy(std::string name, GameSpec game, GaussianPrior prior, int M, GibbsOptions opts)
    : Policy(std::move(name), game), prior_(std::move(prior)), opts_(opts) {
  if (M < 1) throw std::invalid_argument("PgTsPolicy: M must be positive");
  if (prior_.dim() != game.d) throw std::invalid_argument("PgTsPolicy: prior dimension mismatch");
  chain_.M = M;
}

void PgTsPolicy::on_reset() { chain_.last_theta.reset(); }

Action PgTsPolicy::select(const Vector& x) {
  if (!chain_.initialized()) chain_.initialize(prior_, rng(), opts_);
  return pgts_select(chain_, prior_, data(), x, game(), rng(), opts_);
}

PgIdsPolicy::PgIdsPolicy(std::string name, GameSpec game, GaussianPrior prior, int M, double lambda,
                         IdsVariant variant, GibbsOptions opts)
    : Policy(std::move(name), game), prior_(std::move(prior)), opts_(opts), lambda_(lambda), variant_(variant) {
  if (M < 1) throw std::invalid_argument("PgIdsPolicy: M must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("PgIdsPolicy: lambda must be nonnegative");
  if (prior_.dim() != game.d) throw std::invalid_argument("PgIdsPolicy: prior dimension mismatch");
  chain_.M = M;
}

void PgIdsPolicy::on_reset() {
  chain_.last_theta.reset();
  last_ = {};
}

Action PgIdsPolicy::select(const Vector& x) {
  if (!chain_.initialized()) chain_.initialize(prior_, rng(), opts_);
  last_ = pgids_decide(chain_, prior_, data(), x, game(), lambda_, variant_, rng(), opts_);
  return last_.action;
}

EpsilonGreedyPolicy::EpsilonGreedyPolicy(std::string name, GameSpec game, double epsilon, double ridge)
    : Policy(std::move(name), game), epsilon_(epsilon), ridge_(ridge) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("EpsilonGreedyPolicy: epsilon not in [0,1]");
  if (!(ridge > 0.0)) throw std::invalid_argument("EpsilonGreedyPolicy: ridge must be positive");
}

Action EpsilonGreedyPolicy::select(const Vector& x) {
  return epsilon_greedy_select(data(), x, game(), epsilon_, rng(), ridge_, &mle_);
}

CbpSidePolicy::CbpSidePolicy(std::string name, GameSpec game, CbpSideConstants consts, double design_ridge)
    : Policy(std::move(name), game), consts_(consts), design_ridge_(design_ridge) {
  if (!(design_ridge > 0.0)) throw std::invalid_argument("CbpSidePolicy: design ridge must be positive");
  if (!(consts.ridge > 0.0)) throw std::invalid_argument("CbpSidePolicy: estimator ridge must be positive");
  on_reset();
}

void CbpSidePolicy::on_reset() {
  V_ = design_ridge_ * Matrix::Identity(game().d, game().d);
  mle_.reset();
}

void CbpSidePolicy::on_observe(const Vector& x) { V_.noalias() += x * x.transpose(); }

Action CbpSidePolicy::select(const Vector& x) { return cbp_side_select(data(), V_, x, game(), consts_, &mle_); }

}  // namespace appletaste
