#include "appletaste/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace appletaste {

void GameSpec::validate() const {
  if (!(l11 >= 0.0) || !(l01 >= l11)) {
    throw std::invalid_argument("GameSpec: require 0 <= l11 <= l01");
  }
  if (!(l11 < 1.0)) throw std::invalid_argument("GameSpec: l11 must be below 1 so feedback identifies the class");
  if (d < 1) throw std::invalid_argument("GameSpec: d must be positive");
  if (T < 1) throw std::invalid_argument("GameSpec: T must be positive");
}

double GameSpec::max_regret() const { return std::max(1.0, l01 - l11); }

int Feedback::revealed_class() const {
  if (!signal) throw std::logic_error("Feedback: no signal for action 0");
  return *signal == 1.0 ? 0 : 1;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double expected_loss(Action a, double p, const GameSpec& g) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("expected_loss: probability outside [0,1]: " + std::to_string(p));
  }
  return a == Action::kZero ? g.l01 * p : 1.0 + (g.l11 - 1.0) * p;
}

Action optimal_action(double class1_prob, const GameSpec& g) {
  if (!(class1_prob >= 0.0 && class1_prob <= 1.0)) {
    throw std::invalid_argument("optimal_action: probability outside [0,1]");
  }
  // Ties go to the informative action.
  return class1_prob >= g.indifference_probability() ? Action::kOne : Action::kZero;
}

Action optimal_action(const Vector& theta, const Vector& x, const GameSpec& g) {
  if (theta.size() != x.size()) throw std::invalid_argument("optimal_action: dimension mismatch");
  return optimal_action(sigmoid(x.dot(theta)), g);
}

double realized_loss(Action a, int c, const GameSpec& g) {
  if (a == Action::kZero) return c == 0 ? 0.0 : g.l01;
  return c == 0 ? 1.0 : g.l11;
}

Feedback feedback(Action a, int c, const GameSpec& g) {
  if (a == Action::kZero) return {};
  return Feedback{realized_loss(Action::kOne, c, g)};
}

double action_gap(Action a, double p, const GameSpec& g) {
  const double l0 = expected_loss(Action::kZero, p, g);
  const double l1 = expected_loss(Action::kOne, p, g);
  return std::max(0.0, (a == Action::kZero ? l0 : l1) - std::min(l0, l1));
}

}  // namespace appletaste
