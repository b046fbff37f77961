#include "dpg/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace dpg {

BanditInstance::BanditInstance(Vec rewards) : rewards_(std::move(rewards)) {
  if (rewards_.size() < 2)
    throw std::invalid_argument("BanditInstance: need at least 2 arms");
  bool out_of_range = false;
  for (double r : rewards_) {
    if (!std::isfinite(r))
      throw std::invalid_argument("BanditInstance: rewards must be finite");
    if (r < 0.0 || r > 1.0) out_of_range = true;
  }
  if (out_of_range)
    std::fprintf(stderr, "warning: bandit rewards outside [0, 1]\n");
  optimal_ = static_cast<int>(
      std::max_element(rewards_.begin(), rewards_.end()) - rewards_.begin());
  for (std::size_t i = 0; i + 1 < rewards_.size() && distinct_; ++i)
    for (std::size_t j = i + 1; j < rewards_.size(); ++j)
      if (rewards_[i] == rewards_[j]) {
        distinct_ = false;
        break;
      }
}

double BanditInstance::reward(int a) const {
  if (a < 0 || a >= arms()) throw std::out_of_range("BanditInstance: arm index");
  return rewards_[static_cast<std::size_t>(a)];
}

std::vector<int> BanditInstance::descending_order() const {
  std::vector<int> order(rewards_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return rewards_[static_cast<std::size_t>(a)] > rewards_[static_cast<std::size_t>(b)];
  });
  return order;
}

double BanditInstance::gap(int a, int b) const { return reward(a) - reward(b); }

Logits::Logits(Vec t) : theta(std::move(t)) {
  if (theta.size() < 2) throw std::invalid_argument("Logits: need at least 2 arms");
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument("Logits: entries must be finite");
}

PolicySimplex PolicySimplex::from_probabilities(Vec pi) {
  if (pi.empty()) throw std::invalid_argument("PolicySimplex: empty");
  double sum = 0.0;
  for (double p : pi) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw std::invalid_argument("PolicySimplex: entries must lie in [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("PolicySimplex: entries must sum to 1");
  return PolicySimplex(std::move(pi));
}

PolicySimplex PolicySimplex::uniform(int k) {
  if (k < 1) throw std::invalid_argument("PolicySimplex: k must be >= 1");
  return PolicySimplex(Vec(static_cast<std::size_t>(k), 1.0 / k));
}

double PolicySimplex::floored(int a) const {
  return std::max(pi_[static_cast<std::size_t>(a)], kProbFloor);
}

double PolicySimplex::surprisal(int a) const { return -std::log(floored(a)); }

PolicySimplex softmax(const Logits& theta) {
  const double m = *std::max_element(theta.theta.begin(), theta.theta.end());
  Vec pi(theta.theta.size());
  double z = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    pi[a] = std::exp(theta.theta[a] - m);
    z += pi[a];
  }
  for (auto& p : pi) p /= z;
  return PolicySimplex(std::move(pi));
}

double value(const BanditInstance& b, const PolicySimplex& pi) {
  if (pi.arms() != b.arms())
    throw std::invalid_argument("value: arm count mismatch");
  double v = 0.0;
  for (int a = 0; a < b.arms(); ++a) v += pi[a] * b.reward(a);
  return v;
}

Vec advantages(const BanditInstance& b, const PolicySimplex& pi) {
  const double v = value(b, pi);
  Vec u(static_cast<std::size_t>(b.arms()));
  for (int a = 0; a < b.arms(); ++a)
    u[static_cast<std::size_t>(a)] = b.reward(a) - v;
  return u;
}

ArmClassification classify_arms(const BanditInstance& b, const PolicySimplex& pi, int corner) {
  if (pi.arms() != b.arms())
    throw std::invalid_argument("classify_arms: arm count mismatch");
  if (corner < 0 || corner >= b.arms())
    throw std::invalid_argument("classify_arms: corner index out of range");
  ArmClassification c;
  c.corner = corner;
  c.epsilon = 1.0 - pi[corner];
  const double rc = b.reward(corner);
  for (int a = 0; a < b.arms(); ++a) {
    if (a == corner) continue;
    if (b.reward(a) > rc)
      c.allies.push_back(a);
    else if (b.reward(a) < rc)
      c.harmful.push_back(a);
  }
  return c;
}

}  // namespace dpg
