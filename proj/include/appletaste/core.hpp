#pragma once

// Game mathematics for logistic contextual apple tasting.
//
// Each round an item with features x arrives; its class C is Bernoulli with
// success probability sigmoid(x'theta*). The learner labels it 0 or 1 and
// only learns C when it labels the item 1. Losses are
//
//            C = 0    C = 1
//   A = 0      0       l01
//   A = 1      1       l11
//
// and the feedback matrix reveals the loss of action 1 only.

#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Dense>

namespace appletaste {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Action : std::uint8_t { kZero = 0, kOne = 1 };

constexpr int to_int(Action a) { return static_cast<int>(a); }
constexpr Action action_from_int(int a) { return a == 0 ? Action::kZero : Action::kOne; }

struct GameSpec {
  double l01 = 0.4;   // class-1 item labelled 0
  double l11 = 0.05;  // class-1 item labelled 1
  int d = 1;
  int T = 1;

  // Throws std::invalid_argument when the losses admit no finite
  // classification boundary or the sizes are nonpositive.
  void validate() const;

  // Class-1 probability at which both labels have equal expected loss.
  double indifference_probability() const { return 1.0 / (1.0 + l01 - l11); }
  // Largest possible per-round pseudo-regret.
  double max_regret() const;
};

// Revealed signal; empty exactly when action 0 was played.
struct Feedback {
  std::optional<double> signal;

  bool revealed() const { return signal.has_value(); }
  // Recovers the true class from the signal (1 -> class 0, l11 -> class 1).
  int revealed_class() const;
};

double sigmoid(double z);
// log(sigmoid(z)) without cancellation for large |z|.
double log_sigmoid(double z);

double expected_loss(Action a, double p, const GameSpec& g);
Action optimal_action(double class1_prob, const GameSpec& g);
Action optimal_action(const Vector& theta, const Vector& x, const GameSpec& g);
double realized_loss(Action a, int c, const GameSpec& g);
Feedback feedback(Action a, int c, const GameSpec& g);

// expected_loss(a, p) - min over actions of expected_loss(., p).
double action_gap(Action a, double p, const GameSpec& g);

}  // namespace appletaste
