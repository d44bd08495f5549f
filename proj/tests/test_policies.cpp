#include <cmath>
#include <vector>

#include <doctest.h>

#include "appletaste/policies.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace appletaste;

namespace {

GameSpec game_i(int d = 1) { return GameSpec{0.4, 0.05, d, 500}; }

Vector scalar(double v) { return Vector::Constant(1, v); }

std::vector<Vector> as_samples(const std::vector<double>& grid) {
  std::vector<Vector> out;
  out.reserve(grid.size());
  for (double v : grid) out.push_back(scalar(v));
  return out;
}

}  // namespace

TEST_CASE("likelihood term") {
  const Vector x = scalar(0.7), zero = scalar(0.0);
  CHECK(likelihood_term(x, zero, 1) == 0.5);
  CHECK(likelihood_term(x, zero, 0) == 0.5);
  const Vector theta = scalar(1.3);
  CHECK(likelihood_term(x, theta, 1) + likelihood_term(x, theta, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(likelihood_term(x, theta, 1) == doctest::Approx(sigmoid(0.91)));
}

TEST_CASE("IDS estimates: degenerate cases") {
  const GameSpec g = game_i();
  Dataset data(1);
  data.add(scalar(1.0), 1);
  data.add(scalar(-0.4), 0);

  SUBCASE("identical samples carry no information") {
    const std::vector<Vector> same(20, scalar(0.8));
    const IdsEstimates e = ids_estimates(same, scalar(1.5), g, data);
    CHECK(std::abs(e.info_raw) < 1e-14);
    CHECK(e.info1 == doctest::Approx(0.0));
  }
  SUBCASE("a single sample has a zero-regret action") {
    for (double th : {-2.0, 0.1, 3.0}) {
      const std::vector<Vector> one{scalar(th)};
      const IdsEstimates e = ids_estimates(one, scalar(1.0), g, data);
      CAPTURE(th);
      CHECK(std::min(e.delta0, e.delta1) == 0.0);
    }
  }
  SUBCASE("no samples is an error") {
    CHECK_THROWS(ids_estimates(std::vector<Vector>{}, scalar(1.0), g, data));
  }
}

TEST_CASE("IDS estimates agree with grid quadrature") {
  const GameSpec g = game_i();
  const auto grid = testing::linspace(-1.0, 1.0, 2001);
  const std::vector<double> flat(grid.size(), 1.0);
  const auto samples = as_samples(grid);
  for (double x : {0.5, 1.5, 3.0, -2.0}) {
    const auto oracle = testing::grid_ids(grid, flat, x, g);
    const IdsEstimates e = ids_estimates(samples, scalar(x), g, Dataset(1));
    CAPTURE(x);
    CHECK(e.delta0 == doctest::Approx(oracle.delta0).epsilon(1e-9));
    CHECK(e.delta1 == doctest::Approx(oracle.delta1).epsilon(1e-9));
    CHECK(e.info1 == doctest::Approx(oracle.info1).epsilon(1e-9));
  }
}

TEST_CASE("IDS estimates stay finite on long histories") {
  // 2000 observations drive raw likelihood products far below the smallest double.
  const GameSpec g = game_i();
  Dataset data(1);
  for (int i = 0; i < 2000; ++i) data.add(scalar(3.0), i % 2);
  std::vector<Vector> samples;
  for (int m = 0; m < 15; ++m) samples.push_back(scalar(-0.5 + 0.07 * m));
  const IdsEstimates e = ids_estimates(samples, scalar(1.0), g, data);
  CHECK(std::isfinite(e.info_raw));
  CHECK(e.info1 >= 0.0);
}

TEST_CASE("traditional IDS probability") {
  CHECK(ids_prob_traditional(0.1, 0.5) == doctest::Approx(0.25));
  CHECK(ids_prob_traditional(0.1, 0.2) == 1.0);
  CHECK(ids_prob_traditional(0.0, 0.3) == 0.0);
  CHECK(ids_prob_traditional(0.2, 0.2) == 1.0);
}

TEST_CASE("tunable IDS probability") {
  CHECK(ids_prob_tunable(0.0, 0.3, 0.7, 0.0) == 0.0);
  CHECK(ids_prob_tunable(0.05, 0.15, 0.5, 0.05) == doctest::Approx(0.75));
  CHECK(ids_prob_tunable(0.05, 0.15, 0.0, 0.05) == 0.0);
  CHECK(ids_prob_tunable(0.0, 0.0, 0.0, 0.05) == 1.0);
  CHECK(ids_prob_tunable(0.3, 0.0, 0.0, 0.05) == 1.0);
  // scaling both regrets changes the answer
  CHECK(ids_prob_tunable(0.10, 0.30, 0.5, 0.05) != doctest::Approx(0.75));
}

TEST_CASE("PG-TS with a pinned prior") {
  const GameSpec g = game_i();
  const Vector x = scalar(1.0);
  const Matrix tiny = 1e-8 * Matrix::Identity(1, 1);
  for (double b : {4.0, -4.0}) {
    const GaussianPrior prior(scalar(b), tiny);
    const Action expect = b > 0 ? Action::kOne : Action::kZero;
    int agree = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      GibbsChain chain;
      chain.M = 5;
      chain.initialize(prior, rng);
      agree += pgts_select(chain, prior, Dataset(1), x, g, rng) == expect;
    }
    CAPTURE(b);
    CHECK(agree / 100.0 > 0.99);
  }
}

TEST_CASE("PG-IDS with a pinned prior is greedy on the prior mean") {
  const GameSpec g = game_i();
  const Vector x = scalar(1.0);
  const Matrix tiny = 1e-8 * Matrix::Identity(1, 1);
  for (double b : {0.5, 2.5}) {
    const GaussianPrior prior(scalar(b), tiny);
    const Action greedy = optimal_action(sigmoid(b), g);
    Rng rng(77);
    GibbsChain chain;
    chain.M = 10;
    chain.initialize(prior, rng);
    for (int i = 0; i < 50; ++i) {
      const IdsDecision d = pgids_decide(chain, prior, Dataset(1), x, g, 0.05, IdsVariant::kTunable, rng);
      CHECK(d.estimates.info1 < 1e-6);
      CHECK(d.action == greedy);
    }
  }
}

TEST_CASE("selectors need an initialised chain") {
  const GaussianPrior prior = GaussianPrior::isotropic(1);
  GibbsChain chain;
  Rng rng(1);
  CHECK_THROWS(pgts_select(chain, prior, Dataset(1), scalar(1.0), game_i(), rng));
  CHECK_THROWS(pgids_select(chain, prior, Dataset(1), scalar(1.0), game_i(), 0.1, IdsVariant::kTunable, rng));
}

TEST_CASE("epsilon-greedy frequencies") {
  const GameSpec g = game_i();
  const Vector x = scalar(1.0);
  // empty data: the penalised MLE is zero, sigmoid 0.5 < 1/1.35, so greedy plays 0
  const int n = 10000;
  Rng rng(123);
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += epsilon_greedy_select(Dataset(1), x, g, 0.0, rng) == Action::kOne;
  CHECK(ones == 0);
  ones = 0;
  for (int i = 0; i < n; ++i) ones += epsilon_greedy_select(Dataset(1), x, g, 1.0, rng) == Action::kOne;
  CHECK(testing::within_3se(ones, n, 0.5));
  ones = 0;
  for (int i = 0; i < n; ++i) ones += epsilon_greedy_select(Dataset(1), x, g, 0.1, rng) == Action::kOne;
  CHECK(testing::within_3se(ones, n, 0.05));
  CHECK_THROWS(epsilon_greedy_select(Dataset(1), x, g, 1.5, rng));
}

TEST_CASE("CBP-SIDE confidence width") {
  const Matrix V = Matrix::Constant(1, 1, 2.0);
  const double w = confidence_width(scalar(1.0), V, 1, 1, 1.0, 5.0);
  CHECK(w == doctest::Approx(5.0 * 3.0 * std::sqrt(0.5)).epsilon(1e-12));
  CHECK(w == doctest::Approx(10.6066).epsilon(1e-5));

  Matrix V2(2, 2);
  V2 << 3.0, 0.4, 0.4, 1.5;
  Vector x(2);
  x << 0.3, -0.8;
  const double w1 = confidence_width(x, V2, 7, 2, 2.0, 1.7);
  CHECK(confidence_width(2.0 * x, V2, 7, 2, 2.0, 1.7) == doctest::Approx(2.0 * w1).epsilon(1e-13));
  CHECK(confidence_width(x, V2 + x * x.transpose(), 7, 2, 2.0, 1.7) < w1);
  // N = 0 uses delta = 1
  CHECK(confidence_width(scalar(1.0), V, 0, 1, 1.0, 1.0) ==
        doctest::Approx((std::sqrt(2.0) + 1.0) * std::sqrt(0.5)).epsilon(1e-12));
  CHECK_THROWS(confidence_width(scalar(1.0), Matrix::Constant(1, 1, -1.0), 0, 1, 1.0, 1.0));
}

TEST_CASE("CBP-SIDE rule") {
  CHECK(cbp_side_rule(-0.4, 0.1) == Action::kZero);
  CHECK(cbp_side_rule(0.2, 0.1) == Action::kOne);
  CHECK(cbp_side_rule(-0.05, 0.1) == Action::kOne);

  const GameSpec g = game_i();
  const double s = sigmoid(1.0);
  CHECK(cbp_curvature_constant(1.0) == doctest::Approx(1.0 / (s * (1.0 - s))));
  CHECK(cbp_regret_term(scalar(0.0), scalar(1.0), g) == doctest::Approx(1.35 * 0.5 - 1.0));
  CHECK(cbp_confidence_term(0.1, g) == doctest::Approx(0.135));
}

TEST_CASE("CBP-SIDE labels 1 in the first round") {
  const GameSpec g = game_i(3);
  const Matrix V = 1e-3 * Matrix::Identity(3, 3);
  const auto consts = CbpSideConstants::for_bound(4.0);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Vector x = testing::random_vector(rng, 3, -2.0, 2.0);
    CHECK(cbp_side_select(Dataset(3), V, x, g, consts) == Action::kOne);
  }
}

TEST_CASE("policy update contract") {
  EpsilonGreedyPolicy p("greedy", game_i(), 0.1);
  p.reset(1);
  const Vector x = scalar(0.3);
  CHECK_THROWS(p.update(x, Action::kOne, Feedback{}));
  CHECK_THROWS(p.update(x, Action::kZero, feedback(Action::kOne, 1, game_i())));
  p.update(x, Action::kZero, Feedback{});
  CHECK(p.data().size() == 0);
  p.update(x, Action::kOne, feedback(Action::kOne, 1, game_i()));
  CHECK(p.data().size() == 1);
  CHECK(p.data().classes()(0) == 1.0);
  p.reset(2);
  CHECK(p.data().empty());
}

TEST_CASE("CBP-SIDE design grows only on revealed rounds") {
  CbpSidePolicy p("cbp", game_i(2), CbpSideConstants::for_bound(1.0));
  p.reset(3);
  Vector x(2);
  x << 1.0, 2.0;
  p.update(x, Action::kZero, Feedback{});
  CHECK(p.design().isApprox(1e-3 * Matrix::Identity(2, 2)));
  p.update(x, Action::kOne, feedback(Action::kOne, 0, game_i(2)));
  CHECK(p.design().isApprox(1e-3 * Matrix::Identity(2, 2) + x * x.transpose()));
}

TEST_CASE("policy constructors validate hyperparameters") {
  const auto prior = GaussianPrior::isotropic(1);
  CHECK_THROWS(PgTsPolicy("ts", game_i(), prior, 0));
  CHECK_THROWS(PgTsPolicy("ts", game_i(2), prior, 5));
  CHECK_THROWS(PgIdsPolicy("ids", game_i(), prior, 5, -1.0, IdsVariant::kTunable));
  CHECK_THROWS(EpsilonGreedyPolicy("eg", game_i(), 2.0));
  CHECK_THROWS(CbpSidePolicy("cbp", game_i(), CbpSideConstants::for_bound(1.0), 0.0));
}

TEST_CASE("policy randomness is reproducible after reset") {
  const GameSpec g = game_i(2);
  PgIdsPolicy p("ids", g, GaussianPrior::isotropic(2), 10, 0.05, IdsVariant::kTunable);
  Rng ctx(5);
  std::vector<Vector> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(testing::random_vector(ctx, 2, -2.0, 2.0));
  auto play = [&] {
    p.reset(99);
    std::vector<int> acts;
    for (const auto& x : xs) {
      const Action a = p.select(x);
      p.update(x, a, feedback(a, x.sum() > 0 ? 1 : 0, g));
      acts.push_back(to_int(a));
    }
    return acts;
  };
  CHECK(play() == play());
}
