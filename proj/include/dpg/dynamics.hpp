#pragma once

#include <string>

#include "dpg/bandit.hpp"

namespace dpg {

enum class GateKind { kPg, kEg, kDg };

// Selects the per-arm gate w(a) applied to the advantage inside the flow:
//   kPg: w = 1                      (plain policy gradient)
//   kEg: w = 1{U > 0}               (hard gate; exactly 0 at U = 0)
//   kDg: w = sigmoid(U * surprisal / eta)  (smooth gate, temperature eta)
struct GateSpec {
  GateKind kind = GateKind::kPg;
  double eta = 1.0;  // used by kDg only; must be > 0

  static GateSpec pg() { return {GateKind::kPg, 1.0}; }
  static GateSpec eg() { return {GateKind::kEg, 1.0}; }
  static GateSpec dg(double eta);

  std::string name() const;  // "pg", "eg", "dg"
};

GateSpec gate_from_name(const std::string& name, double eta);

// Overflow-free logistic function, exact at extreme arguments.
double stable_sigmoid(double x);

// Per-arm gate weights w(a) at policy pi.
Vec gate_weights(const BanditInstance& b, const PolicySimplex& pi, const GateSpec& g);

// dtheta/dt at pi: theta_dot(a) = pi(a) * (w(a) U(a) - S) with
// S = sum_k w(k) pi(k) U(k). For the ungated case this is exactly the
// softmax policy-gradient field and S = 0.
Vec drift_at(const BanditInstance& b, const PolicySimplex& pi, const GateSpec& g);

// Same field evaluated at softmax(theta).
Vec drift(const BanditInstance& b, const Logits& theta, const GateSpec& g);

// Decomposition of the pairwise logit-gap velocity
//   d/dt (theta(a) - theta(b)) = direct + indirect,
//   direct   = w(a) pi(a) U(a) - w(b) pi(b) U(b)
//   indirect = (pi(b) - pi(a)) * S.
struct LogitGapTerms {
  double direct = 0.0;
  double indirect = 0.0;
  double weighted_sum = 0.0;  // S
  double total = 0.0;
};

LogitGapTerms logit_gap(const BanditInstance& b, const PolicySimplex& pi,
                        const GateSpec& g, int a, int arm_b);

// For a 3-armed bandit with strictly ordered rewards: true iff pi sits in
// the region where the ungated flow moves the best arm's logit down
// relative to the mid arm's, i.e. pi(best)/pi(worst) < (r_mid - r_worst)
// / (2 (r_best - r_mid)). Throws unless K = 3 with distinct rewards.
bool pg_bad_region_test(const BanditInstance& b, const PolicySimplex& pi);

}  // namespace dpg
