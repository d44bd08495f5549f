#include "appletaste/inference.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "appletaste/pg.hpp"

namespace appletaste {

Dataset::Dataset(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("Dataset: dimension must be positive");
}

void Dataset::add(const Vector& x, int c) {
  if (x.size() != dim_) throw std::invalid_argument("Dataset::add: dimension mismatch");
  if (c != 0 && c != 1) throw std::invalid_argument("Dataset::add: class must be 0 or 1");
  features_.insert(features_.end(), x.data(), x.data() + x.size());
  classes_.push_back(static_cast<double>(c));
}

void Dataset::clear() {
  features_.clear();
  classes_.clear();
}

Eigen::Map<const Dataset::RowMatrix> Dataset::features() const {
  return {features_.data(), size(), dim_};
}

Eigen::Map<const Eigen::VectorXd> Dataset::classes() const { return {classes_.data(), size()}; }

GaussianPrior::GaussianPrior(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto d = mean_.size();
  if (d < 1 || cov_.rows() != d || cov_.cols() != d) {
    throw std::invalid_argument("GaussianPrior: mean/covariance dimensions disagree");
  }
  if (!cov_.isApprox(cov_.transpose(), 1e-12)) {
    throw std::invalid_argument("GaussianPrior: covariance is not symmetric");
  }
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("GaussianPrior: covariance is not positive definite");
  }
  cov_chol_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(d, d));
  precision_ = 0.5 * (precision_ + precision_.transpose());
  precision_mean_ = precision_ * mean_;
}

GaussianPrior GaussianPrior::isotropic(int dim, double variance) {
  return {Vector::Zero(dim), variance * Matrix::Identity(dim, dim)};
}

Vector GaussianPrior::sample(Rng& rng) const {
  std::normal_distribution<double> norm(0.0, 1.0);
  Vector z(dim());
  for (auto& v : z) v = norm(rng);
  return mean_ + cov_chol_ * z;
}

Vector compute_kappa(const Dataset& data) {
  return data.classes().array() - 0.5;
}

namespace {

Matrix conditional_precision(const GaussianPrior& prior, const Dataset& data, const Vector& omega) {
  Matrix precision = prior.precision();
  if (!data.empty()) {
    const Matrix weighted = (data.features().array().colwise() * omega.array().sqrt()).matrix();
    precision.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    precision.triangularView<Eigen::StrictlyUpper>() = precision.transpose();
  }
  return precision;
}

Eigen::LLT<Matrix> factor_precision(const Matrix& precision) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite()) {
    std::ostringstream msg;
    msg << "gibbs: conditional precision is not positive definite (diag = "
        << precision.diagonal().transpose() << ")";
    throw InferenceError(msg.str());
  }
  return llt;
}

Vector linear_term(const GaussianPrior& prior, const Dataset& data) {
  Vector rhs = prior.precision_mean();
  if (!data.empty()) rhs.noalias() += data.features().transpose() * compute_kappa(data);
  return rhs;
}

Vector draw_from_factor(const Eigen::LLT<Matrix>& llt, const Vector& mean, Rng& rng) {
  std::normal_distribution<double> norm(0.0, 1.0);
  Vector z(mean.size());
  for (auto& v : z) v = norm(rng);
  // L L' = precision, so L'^-1 z has covariance precision^-1.
  return mean + llt.matrixU().solve(z);
}

Vector restrict_to_ball(Vector theta, const std::function<Vector()>& redraw, const Matrix& metric,
                        const GibbsOptions& opts) {
  if (!opts.truncate) return theta;
  for (int tries = 1; tries < opts.max_tries && theta.norm() > opts.radius; ++tries) {
    theta = redraw();
  }
  if (theta.norm() > opts.radius) theta = project_to_ellipsoid(theta, metric, opts.radius);
  return theta;
}

}  // namespace

ConditionalGaussian conditional_gaussian(const GaussianPrior& prior, const Dataset& data,
                                         const Vector& omega) {
  if (omega.size() != data.size()) throw std::invalid_argument("conditional_gaussian: omega size mismatch");
  const auto llt = factor_precision(conditional_precision(prior, data, omega));
  const auto d = prior.dim();
  ConditionalGaussian out;
  out.mean = llt.solve(linear_term(prior, data));
  out.cov = llt.solve(Matrix::Identity(d, d));
  return out;
}

std::vector<Vector> gibbs(const GaussianPrior& prior, int M, const Dataset& data, const Vector& theta_init,
                          Rng& rng, const GibbsOptions& opts, const PgDraw& pg) {
  if (M < 1) throw std::invalid_argument("gibbs: M must be positive");
  if (data.dim() != prior.dim() || theta_init.size() != prior.dim()) {
    throw std::invalid_argument("gibbs: dimension mismatch");
  }
  std::vector<Vector> draws;
  draws.reserve(M);
  const int sweeps = opts.burn_in + M;

  if (data.empty()) {
    // No likelihood: every sweep is an independent prior draw.
    for (int m = 0; m < sweeps; ++m) {
      Vector theta = sample_prior(prior, rng, opts);
      if (m >= opts.burn_in) draws.push_back(std::move(theta));
    }
    return draws;
  }

  const auto X = data.features();
  const Vector rhs = linear_term(prior, data);
  Vector theta = theta_init;
  Vector omega(data.size());
  Vector tilt(data.size());

  for (int m = 0; m < sweeps; ++m) {
    tilt.noalias() = X * theta;
    for (int i = 0; i < data.size(); ++i) {
      omega[i] = pg ? pg(tilt[i], rng) : sample_pg(tilt[i], rng);
    }
    const auto llt = factor_precision(conditional_precision(prior, data, omega));
    const Vector mean = llt.solve(rhs);
    theta = draw_from_factor(llt, mean, rng);
    if (opts.truncate && theta.norm() > opts.radius) {
      const Matrix cov = llt.solve(Matrix::Identity(prior.dim(), prior.dim()));
      theta = restrict_to_ball(
          theta, [&] { return draw_from_factor(llt, mean, rng); }, cov, opts);
    }
    if (!theta.allFinite()) throw InferenceError("gibbs: non-finite draw");
    if (m >= opts.burn_in) draws.push_back(theta);
  }
  return draws;
}

Vector sample_prior(const GaussianPrior& prior, Rng& rng, const GibbsOptions& opts) {
  Vector theta = prior.sample(rng);
  return restrict_to_ball(
      std::move(theta), [&] { return prior.sample(rng); }, prior.cov(), opts);
}

void GibbsChain::initialize(const GaussianPrior& prior, Rng& rng, const GibbsOptions& opts) {
  last_theta = sample_prior(prior, rng, opts);
}

namespace {

double penalized_log_likelihood(const Dataset& data, const Vector& theta, double ridge) {
  double ll = -0.5 * ridge * theta.squaredNorm();
  if (data.empty()) return ll;
  const Vector z = data.features() * theta;
  const auto c = data.classes();
  for (int i = 0; i < data.size(); ++i) {
    ll += c[i] > 0.5 ? log_sigmoid(z[i]) : log_sigmoid(-z[i]);
  }
  return ll;
}

}  // namespace

MleFit fit_penalized_mle(const Dataset& data, double ridge, const std::optional<Vector>& start) {
  constexpr int kMaxIterations = 100;
  constexpr double kGradTol = 1e-8;
  if (!(ridge >= 0.0)) throw std::invalid_argument("fit_penalized_mle: ridge must be nonnegative");
  if (data.empty() && ridge == 0.0) {
    throw std::invalid_argument("fit_penalized_mle: ridge must be positive when there is no data");
  }
  const int d = data.dim();
  const auto X = data.features();
  const auto c = data.classes();

  MleFit fit;
  fit.theta = start && start->size() == d && start->allFinite() ? *start : Vector::Zero(d);
  double objective = penalized_log_likelihood(data, fit.theta, ridge);

  for (fit.iterations = 0;; ++fit.iterations) {
    Vector p(data.size());
    for (int i = 0; i < data.size(); ++i) p[i] = sigmoid(X.row(i).dot(fit.theta));
    Vector grad = -ridge * fit.theta;
    if (!data.empty()) grad.noalias() += X.transpose() * (c - p);
    fit.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (fit.grad_norm < kGradTol) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= kMaxIterations) break;

    Matrix hessian = ridge * Matrix::Identity(d, d);
    if (!data.empty()) {
      const Vector w = (p.array() * (1.0 - p.array())).sqrt();
      const Matrix weighted = (X.array().colwise() * w.array()).matrix();
      hessian.noalias() += weighted.transpose() * weighted;
    }
    Eigen::LDLT<Matrix> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) break;
    const Vector step = ldlt.solve(grad);

    // Near the optimum the predicted gain is below the rounding error of the
    // objective, so a line search cannot judge the step; take it whole.
    if (0.5 * grad.dot(step) < 1e-10 * (1.0 + std::fabs(objective))) {
      fit.theta += step;
      objective = penalized_log_likelihood(data, fit.theta, ridge);
      continue;
    }

    // Backtrack until the concave objective does not decrease.
    double scale = 1.0;
    bool improved = false;
    for (int k = 0; k < 50; ++k, scale *= 0.5) {
      const Vector candidate = fit.theta + scale * step;
      const double value = penalized_log_likelihood(data, candidate, ridge);
      if (value >= objective) {
        fit.theta = candidate;
        objective = value;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return fit;
}

Vector project_to_ellipsoid(const Vector& theta, const Matrix& V, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_to_ellipsoid: radius must be positive");
  if (V.rows() != theta.size() || V.cols() != theta.size()) {
    throw std::invalid_argument("project_to_ellipsoid: dimension mismatch");
  }
  if (theta.norm() <= radius * (1.0 + 1e-12)) return theta;

  // With V = Q diag(v) Q', the stationarity condition V^-1 (u - theta) + mu u = 0
  // gives u(mu) = Q diag(1 / (1 + mu v)) Q' theta, whose norm falls
  // monotonically in mu. Bisect for ||u(mu)|| = radius.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(V);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("project_to_ellipsoid: V is not positive definite");
  }
  const Vector& v = eig.eigenvalues();
  const Vector beta = eig.eigenvectors().transpose() * theta;
  auto norm_at = [&](double mu) { return (beta.array() / (1.0 + mu * v.array())).matrix().norm(); };

  double lo = 0.0;
  double hi = 1.0 / v.maxCoeff();
  while (norm_at(hi) > radius) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > std::numeric_limits<double>::epsilon() * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (norm_at(mid) > radius ? lo : hi) = mid;
  }
  Vector u = eig.eigenvectors() * (beta.array() / (1.0 + hi * v.array())).matrix();
  const double n = u.norm();
  if (n > radius) u *= radius / n;
  return u;
}

}  // namespace appletaste
