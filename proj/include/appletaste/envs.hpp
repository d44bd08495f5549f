#pragma once

// Problem generators: laws for the true parameter, context processes and
// class draws.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "appletaste/core.hpp"

namespace appletaste {

class GaussianComponent {
 public:
  // Standard normal in one dimension.
  GaussianComponent() : GaussianComponent(Vector::Zero(1), Matrix::Identity(1, 1)) {}
  GaussianComponent(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  Vector sample(Rng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
};

struct IidGaussian {
  GaussianComponent component;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;
  std::vector<double> weights;
};

// Isotropic Gaussian whose mean moves linearly from mean_start (round 1)
// to mean_end (round T).
struct DriftingGaussian {
  Vector mean_start;
  Vector mean_end;
  double sd = 1.0;
};

struct ContextProcess {
  std::variant<IidGaussian, GaussianMixture, DriftingGaussian> kind;
  std::optional<double> clip;  // bound on ||x||_inf

  int dim() const;
  void validate() const;
  Vector sample(int t, int T, Rng& rng) const;
  // Mean of the drifting process at round t (1-based).
  Vector drift_mean(int t, int T) const;
};

// How theta* is generated for each replication.
struct FixedTheta {
  Vector theta;
};
// theta*_j ~ U[low, high], independently set to zero with probability zero_prob.
struct UniformTheta {
  double low = -1.0;
  double high = 1.0;
  double zero_prob = 0.0;
};
using ThetaLaw = std::variant<FixedTheta, UniformTheta>;

struct Environment {
  Vector theta_star;
  ContextProcess process;
  GameSpec game;

  void validate() const;
};

struct ProblemSpec {
  std::string id;  // builtin id or "custom"
  GameSpec game;
  ThetaLaw theta_law;
  ContextProcess process;

  void validate() const;
  Vector draw_theta(Rng& rng) const;
  Environment instantiate(Rng& rng) const;
  Environment instantiate_with(Vector theta_star) const;
};

// One round of the exogenous stream every policy sees.
struct Round {
  Vector x;
  int true_class = 0;
  double class1_prob = 0.5;
};

// Builtin problems "i", "ii", "iii". `dim` overrides the dimension of the
// Gaussian problems (i) and (ii); horizon overrides T.
ProblemSpec builtin_problem(const std::string& id, std::optional<int> dim = {},
                            std::optional<int> horizon = {});
std::vector<std::string> builtin_problem_ids();
std::string describe_problem(const std::string& id);

Environment make_problem(const std::string& id, Rng& rng);

Vector sample_context(const Environment& env, int t, Rng& rng);
int sample_class(const Environment& env, const Vector& x, Rng& rng);

// Draws (x_t, C_t) for t = 1..T.
std::vector<Round> generate_stream(const Environment& env, Rng& rng);

}  // namespace appletaste
