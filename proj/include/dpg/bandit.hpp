#pragma once

#include <vector>

namespace dpg {

using Vec = std::vector<double>;

// Probabilities are floored at this value before any logarithm, so
// surprisals stay finite even after softmax underflow.
inline constexpr double kProbFloor = 1e-30;

// K-armed bandit with a fixed reward vector, kept in the caller's arm
// order. Rewards must be finite and K >= 2; values outside [0, 1] are
// accepted with a warning on stderr since most bounds assume that range.
class BanditInstance {
 public:
  explicit BanditInstance(Vec rewards);

  int arms() const { return static_cast<int>(rewards_.size()); }
  double reward(int a) const;
  const Vec& rewards() const { return rewards_; }

  // Lowest index among arms with maximal reward.
  int optimal_arm() const { return optimal_; }
  bool rewards_distinct() const { return distinct_; }

  // Arm indices sorted by reward, highest first; ties keep index order.
  std::vector<int> descending_order() const;

  // reward(a) - reward(b).
  double gap(int a, int b) const;

 private:
  Vec rewards_;
  int optimal_ = 0;
  bool distinct_ = true;
};

// Unconstrained logit vector; entries must be finite.
struct Logits {
  Vec theta;
  explicit Logits(Vec t);
  int arms() const { return static_cast<int>(theta.size()); }
};

// A point on the probability simplex. Exact zeros are tolerated (softmax
// can underflow); they are floored before logs.
class PolicySimplex {
 public:
  // Validates: K >= 1, entries finite and in [0, 1], sum within 1e-12 of 1.
  static PolicySimplex from_probabilities(Vec pi);
  static PolicySimplex uniform(int k);

  int arms() const { return static_cast<int>(pi_.size()); }
  double operator[](int a) const { return pi_[static_cast<std::size_t>(a)]; }
  const Vec& probs() const { return pi_; }

  double floored(int a) const;
  // -log(floored(a)); large for rare arms, >= 0 always.
  double surprisal(int a) const;

 private:
  explicit PolicySimplex(Vec pi) : pi_(std::move(pi)) {}
  Vec pi_;
  friend PolicySimplex softmax(const Logits&);
};

// Max-subtracted softmax; never overflows, may underflow to exact zero.
PolicySimplex softmax(const Logits& theta);

// Expected reward under pi.
double value(const BanditInstance& b, const PolicySimplex& pi);

// U(a) = r(a) - value(pi); satisfies sum_a pi(a) U(a) = 0.
Vec advantages(const BanditInstance& b, const PolicySimplex& pi);

// View of the instance from a near-vertex policy concentrated on `corner`:
// epsilon = 1 - pi(corner) is the escaped mass, allies earn strictly more
// than the corner arm, harmful arms strictly less. Arms tied with the
// corner arm appear in neither list.
struct ArmClassification {
  int corner = 0;
  double epsilon = 0.0;
  std::vector<int> allies;
  std::vector<int> harmful;
};

ArmClassification classify_arms(const BanditInstance& b, const PolicySimplex& pi, int corner);

}  // namespace dpg
