#pragma once

// Decision rules for apple tasting. Each rule is available as a free
// function over explicit state (for testing and reuse) and wrapped in a
// Policy object that owns its dataset, chain and generator.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appletaste/core.hpp"
#include "appletaste/inference.hpp"

namespace appletaste {

// ---------------------------------------------------------------------------
// Thompson sampling and information-directed sampling
// ---------------------------------------------------------------------------

// Monte-Carlo regret and information-gain estimates for one round.
struct IdsEstimates {
  double delta0 = 0.0;
  double delta1 = 0.0;
  double info1 = 0.0;     // clamped at zero
  double info_raw = 0.0;  // before clamping; may be slightly negative at finite M
};

enum class IdsVariant { kTunable, kTraditional };

struct IdsDecision {
  Action action = Action::kOne;
  double prob_one = 1.0;
  IdsEstimates estimates;
};

// sigma(x'theta)^c (1 - sigma(x'theta))^(1 - c)
double likelihood_term(const Vector& x, const Vector& theta, int c);

// Estimates expected regret of both actions and the expected information
// gain of action 1 from posterior samples. Likelihood products over the
// revealed data are formed in log space with a max shift.
IdsEstimates ids_estimates(std::span<const Vector> samples, const Vector& x, const GameSpec& g,
                           const Dataset& data);

// Minimiser of regret^2 / information over Bernoulli action laws:
// min(1, delta0 / |delta1 - delta0|). Independent of the information gain.
double ids_prob_traditional(double delta0, double delta1);

// Minimiser of regret^2 - lambda * information, clamped to [0, 1].
double ids_prob_tunable(double delta0, double delta1, double info1, double lambda);

// Advances the chain by M sweeps and plays the action optimal for the last draw.
Action pgts_select(GibbsChain& chain, const GaussianPrior& prior, const Dataset& data, const Vector& x,
                   const GameSpec& g, Rng& rng, const GibbsOptions& opts = {});

IdsDecision pgids_decide(GibbsChain& chain, const GaussianPrior& prior, const Dataset& data, const Vector& x,
                         const GameSpec& g, double lambda, IdsVariant variant, Rng& rng,
                         const GibbsOptions& opts = {});

Action pgids_select(GibbsChain& chain, const GaussianPrior& prior, const Dataset& data, const Vector& x,
                    const GameSpec& g, double lambda, IdsVariant variant, Rng& rng,
                    const GibbsOptions& opts = {});

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

inline constexpr double kDefaultRidge = 1e-3;

// Greedy on the ridge-penalised MLE with probability 1 - epsilon, otherwise
// a fair coin.
// `estimate`, when given, warm-starts the fit and receives the new MLE.
Action epsilon_greedy_select(const Dataset& data, const Vector& x, const GameSpec& g, double epsilon, Rng& rng,
                             double ridge = kDefaultRidge, std::optional<Vector>* estimate = nullptr);

// CBP-SIDE specialised to two actions. The observer vectors are
// v01 = -l01 and v10 = l11 - 1, so the confidence term is
// (|v01| + |v10|) w = (1 + l01 - l11) w.
struct CbpSideConstants {
  double R = 1.0;       // bound on ||x||_2
  double C = 0.0;       // inverse curvature bound, see cbp_curvature_constant
  double radius = 1.0;  // parameter ball
  double ridge = kDefaultRidge;

  static CbpSideConstants for_bound(double R, double radius = 1.0, double ridge = kDefaultRidge);
};

// [sigma(R radius)(1 - sigma(R radius))]^-1: the largest inverse logistic
// slope over ||x|| <= R, ||theta|| <= radius.
double cbp_curvature_constant(double R, double radius = 1.0);

// w = C (sqrt(2d(1 + N R^2 / d) + 2 log(1 / delta_N)) + R d) sqrt(x' V^-1 x),
// delta_N = max(N, 1)^-2, N = number of revealed observations so far.
double confidence_width(const Vector& x, const Matrix& V, int N, int d, double R, double C);

// Estimated mu(0) - mu(1) under theta_hat: positive when labelling 1 is better.
double cbp_regret_term(const Vector& theta_hat, const Vector& x, const GameSpec& g);
double cbp_confidence_term(double width, const GameSpec& g);
// Play 1 unless the regret term is confidently below zero.
Action cbp_side_rule(double regret_term, double confidence_term);

Action cbp_side_select(const Dataset& data, const Matrix& V, const Vector& x, const GameSpec& g,
                       const CbpSideConstants& consts, std::optional<Vector>* estimate = nullptr);

// ---------------------------------------------------------------------------
// Policy objects
// ---------------------------------------------------------------------------

class Policy {
 public:
  Policy(std::string name, GameSpec game);
  virtual ~Policy() = default;

  const std::string& name() const { return name_; }
  const GameSpec& game() const { return game_; }
  const Dataset& data() const { return data_; }

  // Forget everything learned and reseed the internal generator.
  void reset(std::uint64_t seed);
  virtual Action select(const Vector& x) = 0;
  // Feedback must be present exactly when a is action 1.
  void update(const Vector& x, Action a, const Feedback& fb);

 protected:
  virtual void on_reset() {}
  virtual void on_observe(const Vector& /*x*/) {}

  Rng& rng() { return rng_; }

 private:
  std::string name_;
  GameSpec game_;
  Dataset data_;
  Rng rng_;
};

class PgTsPolicy : public Policy {
 public:
  PgTsPolicy(std::string name, GameSpec game, GaussianPrior prior, int M, GibbsOptions opts = {});
  Action select(const Vector& x) override;
  const GibbsChain& chain() const { return chain_; }

 protected:
  void on_reset() override;

 private:
  GaussianPrior prior_;
  GibbsOptions opts_;
  GibbsChain chain_;
};

class PgIdsPolicy : public Policy {
 public:
  PgIdsPolicy(std::string name, GameSpec game, GaussianPrior prior, int M, double lambda, IdsVariant variant,
              GibbsOptions opts = {});
  Action select(const Vector& x) override;
  const IdsDecision& last_decision() const { return last_; }

 protected:
  void on_reset() override;

 private:
  GaussianPrior prior_;
  GibbsOptions opts_;
  GibbsChain chain_;
  double lambda_;
  IdsVariant variant_;
  IdsDecision last_;
};

class EpsilonGreedyPolicy : public Policy {
 public:
  EpsilonGreedyPolicy(std::string name, GameSpec game, double epsilon, double ridge = kDefaultRidge);
  Action select(const Vector& x) override;

 protected:
  void on_reset() override { mle_.reset(); }

 private:
  double epsilon_;
  double ridge_;
  std::optional<Vector> mle_;
};

class CbpSidePolicy : public Policy {
 public:
  // V starts at design_ridge * I so that V^-1 exists in round 1.
  CbpSidePolicy(std::string name, GameSpec game, CbpSideConstants consts, double design_ridge = 1e-3);
  Action select(const Vector& x) override;
  const Matrix& design() const { return V_; }

 protected:
  void on_reset() override;
  void on_observe(const Vector& x) override;

 private:
  CbpSideConstants consts_;
  double design_ridge_;
  Matrix V_;
  std::optional<Vector> mle_;
};

}  // namespace appletaste
