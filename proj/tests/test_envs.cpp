#include <cmath>
#include <vector>

#include <doctest.h>

#include "appletaste/envs.hpp"
#include "support.hpp"

using namespace appletaste;

namespace {

Environment iid_env(Vector theta, double variance = 1.0) {
  const int d = static_cast<int>(theta.size());
  Environment env;
  env.theta_star = std::move(theta);
  env.process.kind = IidGaussian{GaussianComponent(Vector::Zero(d), variance * Matrix::Identity(d, d))};
  env.game = GameSpec{0.4, 0.05, d, 1000};
  return env;
}

int class_hits(const Environment& env, const Vector& x, int n, Rng& rng) {
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += sample_class(env, x, rng);
  return hits;
}

}  // namespace

TEST_CASE("builtin problem (i)") {
  Rng rng(1);
  const Environment env = make_problem("i", rng);
  CHECK(env.game.T == 500);
  CHECK(env.game.d == 5);
  CHECK(env.game.l01 == 0.4);
  CHECK(env.game.l11 == 0.05);
  CHECK(env.theta_star.size() == 5);
  CHECK(env.theta_star.cwiseAbs().maxCoeff() <= 1.0);
  const auto& iid = std::get<IidGaussian>(env.process.kind);
  CHECK(iid.component.cov().isApprox(Matrix::Identity(5, 5)));
}

TEST_CASE("builtin problem (ii)") {
  Rng rng(2);
  const Environment env = make_problem("ii", rng);
  CHECK(env.game.T == 1000);
  CHECK(env.game.d == 20);
  CHECK(env.game.l01 == 0.7);
  CHECK(env.game.l11 == 0.1);
  const auto& iid = std::get<IidGaussian>(env.process.kind);
  CHECK(iid.component.cov().isApprox(8.0 * Matrix::Identity(20, 20)));
  const auto law = std::get<UniformTheta>(builtin_problem("ii").theta_law);
  CHECK(law.zero_prob == 0.25);
}

TEST_CASE("builtin problem (iii)") {
  Rng rng(3);
  const Environment env = make_problem("iii", rng);
  CHECK(env.game.T == 500);
  CHECK(env.game.d == 1);
  CHECK(env.game.l01 == 1.0);
  CHECK(env.game.l11 == 0.0);
  CHECK(env.theta_star(0) == 1.0);
  const auto& drift = std::get<DriftingGaussian>(env.process.kind);
  CHECK(drift.mean_start(0) == -0.1);
  CHECK(drift.mean_end(0) == 0.0);
  CHECK(drift.sd == 0.025);
  CHECK(env.process.drift_mean(1, 500)(0) == -0.1);
  CHECK(env.process.drift_mean(500, 500)(0) == 0.0);
  CHECK(env.process.drift_mean(250, 500)(0) == doctest::Approx(-0.1 + 0.1 * 249.0 / 499.0));
}

TEST_CASE("builtin overrides and unknown ids") {
  CHECK(builtin_problem("i", 12).game.d == 12);
  CHECK(builtin_problem("ii", 3, 40).game.T == 40);
  CHECK_THROWS(builtin_problem("iii", 2));
  CHECK_THROWS(builtin_problem("iv"));
  CHECK_THROWS(describe_problem("iv"));
  CHECK(builtin_problem_ids() == std::vector<std::string>{"i", "ii", "iii"});
}

TEST_CASE("drifting contexts follow the mean path") {
  Rng rng(4);
  const Environment env = make_problem("iii", rng);
  const int n = 10000;
  for (int t : {1, 500}) {
    std::vector<double> xs;
    // repeated draws at a fixed round
    for (int i = 0; i < n; ++i) xs.push_back(sample_context(env, t, rng)(0));
    CAPTURE(t);
    CHECK(std::abs(testing::mean(xs) - env.process.drift_mean(t, 500)(0)) < 3.0 * testing::std_error(xs));
    CHECK(std::sqrt(testing::variance(xs)) == doctest::Approx(0.025).epsilon(0.05));
  }
  CHECK_THROWS(sample_context(env, 0, rng));
  CHECK_THROWS(sample_context(env, 501, rng));
}

TEST_CASE("iid Gaussian contexts are centred") {
  Rng rng(5);
  const Environment env = iid_env(Vector::Zero(3));
  std::vector<std::vector<double>> cols(3);
  for (int i = 0; i < 10000; ++i) {
    const Vector x = sample_context(env, 1, rng);
    for (int j = 0; j < 3; ++j) cols[j].push_back(x(j));
  }
  for (int j = 0; j < 3; ++j) {
    CAPTURE(j);
    CHECK(std::abs(testing::mean(cols[j])) < 3.0 * testing::std_error(cols[j]));
  }
}

TEST_CASE("degenerate mixture uses its only live component") {
  ContextProcess proc;
  proc.kind = GaussianMixture{{GaussianComponent(Vector::Constant(1, 5.0), 1e-4 * Matrix::Identity(1, 1)),
                               GaussianComponent(Vector::Constant(1, -5.0), 1e-4 * Matrix::Identity(1, 1))},
                              {1.0, 0.0}};
  proc.validate();
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) CHECK(proc.sample(1, 10, rng)(0) > 4.0);
}

TEST_CASE("context process validation") {
  ContextProcess bad;
  bad.kind = GaussianMixture{{GaussianComponent(), GaussianComponent()}, {0.5, 0.6}};
  CHECK_THROWS(bad.validate());
  bad.kind = DriftingGaussian{Vector::Zero(1), Vector::Zero(1), 0.0};
  CHECK_THROWS(bad.validate());
  bad.kind = IidGaussian{};
  bad.clip = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("clipping bounds every coordinate") {
  ContextProcess proc;
  proc.kind = IidGaussian{GaussianComponent(Vector::Zero(4), 25.0 * Matrix::Identity(4, 4))};
  proc.clip = 2.0;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) CHECK(proc.sample(1, 1, rng).cwiseAbs().maxCoeff() <= 2.0);
}

TEST_CASE("class frequencies") {
  Rng rng(8);
  const int n = 10000;
  const Vector x = Vector::Constant(2, 1.0);
  CHECK(testing::within_3se(class_hits(iid_env(Vector::Zero(2)), x, n, rng), n, 0.5));
  Vector theta(2);
  theta << 6.0, 4.0;  // x'theta = 10
  CHECK(class_hits(iid_env(theta), x, n, rng) > 0.999 * n);
  theta << -0.25, -0.75;  // x'theta = -1
  CHECK(testing::within_3se(class_hits(iid_env(theta), x, n, rng), n, sigmoid(-1.0)));
  CHECK(sigmoid(-1.0) == doctest::Approx(0.2689414).epsilon(1e-6));
}

TEST_CASE("theta laws") {
  ProblemSpec spec = builtin_problem("ii");
  Rng rng(9);
  int zeros = 0, total = 0;
  for (int r = 0; r < 200; ++r) {
    const Vector th = spec.draw_theta(rng);
    for (int j = 0; j < th.size(); ++j) zeros += th(j) == 0.0;
    total += static_cast<int>(th.size());
  }
  CHECK(testing::within_3se(zeros, total, 0.25));
  CHECK_THROWS(spec.instantiate_with(Vector::Zero(3)));
}
