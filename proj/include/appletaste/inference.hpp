#pragma once

// Posterior machinery for the logistic model: the Polya-Gamma augmented
// Gibbs sampler, ridge-penalised maximum likelihood, and the projection of
// an estimate onto the parameter ball in a Mahalanobis metric.

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "appletaste/core.hpp"

namespace appletaste {

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observations revealed by playing action 1, in arrival order.
class Dataset {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit Dataset(int dim);

  void add(const Vector& x, int c);
  void clear();

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(classes_.size()); }
  bool empty() const { return classes_.empty(); }

  // N x d view of the stored contexts.
  Eigen::Map<const RowMatrix> features() const;
  Eigen::Map<const Eigen::VectorXd> classes() const;
  Vector row(int i) const { return features().row(i).transpose(); }

 private:
  int dim_;
  std::vector<double> features_;
  std::vector<double> classes_;
};

// theta ~ MVN(mean, cov). Holds the precision and precision-weighted mean
// used by every Gibbs sweep.
class GaussianPrior {
 public:
  GaussianPrior(Vector mean, Matrix cov);
  static GaussianPrior isotropic(int dim, double variance = 1.0);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& precision() const { return precision_; }
  const Vector& precision_mean() const { return precision_mean_; }

  Vector sample(Rng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix cov_chol_;  // lower factor of cov
  Matrix precision_;
  Vector precision_mean_;
};

// Source of PG(1, c) draws; replaceable so tests can pin omega.
using PgDraw = std::function<double(double, Rng&)>;

struct GibbsOptions {
  int burn_in = 0;
  // Restrict draws to the ball ||theta|| <= radius: up to max_tries
  // rejections, then project the last draw in the conditional's metric.
  bool truncate = false;
  double radius = 1.0;
  int max_tries = 100;
};

// Conditional law of theta given omega: MVN(mean, cov) with
// cov = (X' Omega X + B^-1)^-1 and mean = cov (X' kappa + B^-1 b).
struct ConditionalGaussian {
  Vector mean;
  Matrix cov;
};

Vector compute_kappa(const Dataset& data);
ConditionalGaussian conditional_gaussian(const GaussianPrior& prior, const Dataset& data,
                                         const Vector& omega);

// Runs burn_in + M sweeps from theta_init and returns the last M draws in
// order. Throws InferenceError if a conditional precision is not positive
// definite.
std::vector<Vector> gibbs(const GaussianPrior& prior, int M, const Dataset& data,
                          const Vector& theta_init, Rng& rng, const GibbsOptions& opts = {},
                          const PgDraw& pg = {});

// Draw from the prior, restricted to the ball when opts.truncate is set.
Vector sample_prior(const GaussianPrior& prior, Rng& rng, const GibbsOptions& opts = {});

// Chain position carried across rounds.
struct GibbsChain {
  std::optional<Vector> last_theta;
  int M = 1;

  bool initialized() const { return last_theta.has_value(); }
  void initialize(const GaussianPrior& prior, Rng& rng, const GibbsOptions& opts = {});
};

struct MleFit {
  Vector theta;
  int iterations = 0;
  double grad_norm = 0.0;  // infinity norm at the returned point
  bool converged = false;
};

// Maximises sum_i log l(x_i, theta, c_i) - ridge/2 ||theta||^2 by damped
// Newton (IRLS). Stops when the gradient infinity norm drops below 1e-8 or
// after 100 iterations; `converged` is false in the latter case. Newton
// starts from `start` when given, otherwise from zero.
MleFit fit_penalized_mle(const Dataset& data, double ridge, const std::optional<Vector>& start = {});

// argmin over ||u|| <= radius of (u - theta)' V^-1 (u - theta).
Vector project_to_ellipsoid(const Vector& theta, const Matrix& V, double radius);

}  // namespace appletaste
