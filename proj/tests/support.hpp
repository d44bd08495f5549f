#pragma once

// Shared helpers for the unit, property and acceptance tests: summary
// statistics, a two-sample Kolmogorov-Smirnov check, and a small
// generate-and-check loop for property tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "appletaste/core.hpp"

namespace testing {

using appletaste::Rng;

inline constexpr int kPropertyCases = 1000;

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double std_error(const std::vector<double>& v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

// sup_x |F_a(x) - F_b(x)| for the empirical CDFs.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic two-sample critical value at level 0.01: c(a) sqrt((n+m)/(nm)).
inline double ks_critical_01(std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(0.01 / 2.0));  // 1.6276
  return c * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

// Binomial frequency check: |hits/n - p| <= 3 standard errors.
inline bool within_3se(int hits, int n, double p) {
  const double se = std::sqrt(p * (1.0 - p) / n);
  return std::abs(static_cast<double>(hits) / n - p) <= 3.0 * se;
}

// Runs `prop` on `cases` values drawn by `gen`; reports the first failing
// case index with the seed so it can be replayed.
template <class Gen, class Prop>
void for_all(const char* name, std::uint64_t seed, Gen gen, Prop prop, int cases = kPropertyCases) {
  Rng rng(seed);
  int failures = 0;
  int first = -1;
  for (int i = 0; i < cases; ++i) {
    auto value = gen(rng);
    if (!prop(value)) {
      if (first < 0) first = i;
      ++failures;
    }
  }
  INFO(name << ": " << failures << "/" << cases << " cases failed (seed " << seed << ", first case " << first << ")");
  CHECK(failures == 0);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline appletaste::Vector random_vector(Rng& rng, int d, double lo = -1.0, double hi = 1.0) {
  appletaste::Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

// A random game with 0 <= l11 <= l01 and l11 < 1.
inline appletaste::GameSpec random_game(Rng& rng) {
  appletaste::GameSpec g;
  g.l11 = uniform(rng, 0.0, 0.9);
  g.l01 = uniform(rng, g.l11, 2.0);
  if (g.l01 == g.l11) g.l01 = g.l11 + 0.1;
  g.d = 1;
  g.T = 1;
  return g;
}

}  // namespace testing
