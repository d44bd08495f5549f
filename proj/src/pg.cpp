#include "appletaste/pg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace appletaste {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;  // crossover between the two proposal pieces
constexpr int kMaxProposals = 10000;

// log of the standard normal CDF, with the asymptotic tail for x << 0.
double log_norm_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// n-th coefficient of the Jacobi J*(1) density series at x, using the
// left representation below kTrunc and the right one above.
double series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double expnt = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                       2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// Probability of taking the exponential-tail proposal piece.
double exponential_piece_mass(double z, double fz) {
  const double t = kTrunc;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_norm_cdf(b);
  const double xa = x0 + z + log_norm_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian IG(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> norm(0.0, 1.0);
  const double t = kTrunc;
  double x = t + 1.0;

  if (1.0 / t > z) {
    // Mean beyond the truncation point: draw from the truncated z = 0
    // law (an inverse chi-square) and accept with exp(-z^2 x / 2).
    for (int i = 0; i < kMaxProposals; ++i) {
      double e1 = expo(rng);
      double e2 = expo(rng);
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = expo(rng);
        e2 = expo(rng);
      }
      x = 1.0 + e1 * t;
      x = t / (x * x);
      if (unif(rng) <= std::exp(-0.5 * z * z * x)) return x;
    }
  } else {
    const double mu = 1.0 / z;
    for (int i = 0; i < kMaxProposals; ++i) {
      double y = norm(rng);
      y *= y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (unif(rng) > mu / (mu + x)) x = mu * mu / x;
      if (x <= t) return x;
    }
  }
  throw std::runtime_error("sample_pg: truncated inverse Gaussian proposal did not terminate");
}

}  // namespace

double sample_pg(double c, Rng& rng) {
  if (!std::isfinite(c)) throw std::invalid_argument("sample_pg: non-finite tilt " + std::to_string(c));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  // PG(1, c) = J*(1, |c| / 2) / 4.
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double exp_mass = exponential_piece_mass(z, fz);

  for (int proposal = 0; proposal < kMaxProposals; ++proposal) {
    const double x = unif(rng) < exp_mass ? kTrunc + expo(rng) / fz : truncated_inverse_gaussian(z, rng);

    double s = series_coef(0, x);
    const double y = unif(rng) * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
  throw std::runtime_error("sample_pg: no proposal accepted after " + std::to_string(kMaxProposals) +
                           " attempts (c = " + std::to_string(c) + ")");
}

double pg_series_value(double c, std::span<const double> gammas) {
  const double shift = c * c / (4.0 * kPi * kPi);
  double sum = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double k = static_cast<double>(i + 1) - 0.5;
    sum += gammas[i] / (k * k + shift);
  }
  return sum / (2.0 * kPi * kPi);
}

double pg_series_oracle(double c, int n_terms, Rng& rng) {
  if (n_terms < 1) throw std::invalid_argument("pg_series_oracle: n_terms must be positive");
  std::exponential_distribution<double> gamma1(1.0);
  const double shift = c * c / (4.0 * kPi * kPi);
  double sum = 0.0;
  for (int i = 1; i <= n_terms; ++i) {
    const double k = i - 0.5;
    sum += gamma1(rng) / (k * k + shift);
  }
  return sum / (2.0 * kPi * kPi);
}

double pg_series_mean(double c, int n_terms) {
  const double shift = c * c / (4.0 * kPi * kPi);
  double sum = 0.0;
  for (int i = n_terms; i >= 1; --i) {
    const double k = i - 0.5;
    sum += 1.0 / (k * k + shift);
  }
  return sum / (2.0 * kPi * kPi);
}

double pg_mean(double c) {
  if (std::fabs(c) < 1e-8) return 0.25 - c * c / 48.0;
  return std::tanh(0.5 * c) / (2.0 * c);
}

}  // namespace appletaste
