#pragma once

// Polya-Gamma PG(1, c) variates.
//
// PG(b, c) is the law of (1 / 2 pi^2) sum_k G_k / ((k - 1/2)^2 + c^2 / (4 pi^2))
// with G_k ~ Gamma(b, 1) i.i.d. sample_pg draws PG(1, c) exactly with the
// alternating-series rejection sampler of Polson, Scott & Windle (2013): the
// proposal is a two-piece mixture (truncated inverse Gaussian below 0.64,
// exponential tail above) and acceptance is decided by squeezing a uniform
// between partial sums of the Jacobi density series.

#include <span>

#include "appletaste/core.hpp"

namespace appletaste {

// Exact PG(1, c) draw. Throws std::runtime_error if 10^4 proposals are
// rejected in a row, which for finite c does not happen in practice
// (acceptance probability is at least 0.9992).
double sample_pg(double c, Rng& rng);

// Truncated-series draw: n_terms Exp(1) variates fed through the defining
// series. Biased low by O(1 / n_terms); only for validating sample_pg.
double pg_series_oracle(double c, int n_terms, Rng& rng);

// Same series evaluated at caller-supplied Gamma(1,1) values.
double pg_series_value(double c, std::span<const double> gammas);

// Mean of the series truncated after n_terms terms.
double pg_series_mean(double c, int n_terms);

// Closed-form E[PG(1, c)] = tanh(c / 2) / (2 c).
double pg_mean(double c);

}  // namespace appletaste
