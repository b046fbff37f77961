#pragma once

#include <functional>

#include "dpg/dynamics.hpp"

namespace dpg {

// One multiplicative-weights update. `value_delta` is the directly
// measured change in expected reward; `progress` is the closed-form
// expression for the same quantity (they agree to roundoff, and progress
// is a sum of nonnegative terms, which is what makes each step ascent).
struct StepReport {
  PolicySimplex pi_next;
  double value_delta = 0.0;
  double progress = 0.0;
  double partition = 0.0;  // normalizer Z of the update
};

// pi'(a) = pi(a) exp(eta * max(U(a), 0)) / Z;
// progress = (1/Z) sum_{U(a)>0} pi(a) U(a) (exp(eta U(a)) - 1).
StepReport eg_step(const BanditInstance& b, const PolicySimplex& pi, double eta);

// pi'(a) = pi(a) exp(alpha * w(a) U(a)) / Z with the smooth gate
// w(a) = sigmoid(U(a) * surprisal(a) / eta);
// progress = (1/Z) sum_a pi(a) U(a) (exp(alpha w(a) U(a)) - 1),
// where every term is nonnegative because x (e^{cx} - 1) >= 0 for c > 0.
StepReport dg_step(const BanditInstance& b, const PolicySimplex& pi, double eta, double alpha);

struct ConvergenceRun {
  std::vector<double> deltas;  // optimality gap r(a*) - V(pi_t), one per iterate
  PolicySimplex final_pi;
  bool converged = false;
  long iterations = 0;
};

using BanditStepper = std::function<PolicySimplex(const BanditInstance&, const PolicySimplex&)>;

// Iterates `step` from `start`, recording the optimality gap before each
// update. Stops once the gap drops below tol (but never before min_iters,
// so rate fits on the tail see the asymptotic regime) or at max_iters.
ConvergenceRun run_to_convergence(const BanditInstance& b, const PolicySimplex& start,
                                  const BanditStepper& step, double tol, long max_iters,
                                  long min_iters = 0);

// Predicted asymptotic rate constant for the hard-gated update on a
// bandit with optimality gaps <= R: delta_t ~ 1 / (c t) with
// c = eta / (2 exp(eta R)).
double eg_rate_constant(double eta, double reward_range);

}  // namespace dpg
