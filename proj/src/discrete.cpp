#include "dpg/discrete.hpp"

#include <cmath>
#include <stdexcept>

namespace dpg {

namespace {

// Shared tail of both updates: pi'(a) = pi(a) exp(boost(a)) / Z and the
// matching closed-form progress (1/Z) sum_a pi(a) U(a) (exp(boost(a)) - 1).
StepReport exponentiated_step(const BanditInstance& b, const PolicySimplex& pi,
                              const Vec& u, const Vec& boost) {
  double z = 0.0;
  Vec scaled(boost.size());
  for (std::size_t i = 0; i < boost.size(); ++i) {
    if (boost[i] > 700.0)
      throw std::runtime_error("exponentiated step: boost overflows exp");
    scaled[i] = pi[static_cast<int>(i)] * std::exp(boost[i]);
    z += scaled[i];
  }
  if (!(z > 0.0) || !std::isfinite(z))
    throw std::runtime_error("exponentiated step: degenerate normalizer");
  Vec next(scaled.size());
  double progress = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    next[i] = scaled[i] / z;
    progress += pi[static_cast<int>(i)] * u[i] * std::expm1(boost[i]);
  }
  progress /= z;
  StepReport rep{PolicySimplex::from_probabilities(std::move(next)), 0.0, progress, z};
  rep.value_delta = value(b, rep.pi_next) - value(b, pi);
  return rep;
}

void check_args(const BanditInstance& b, const PolicySimplex& pi, double eta) {
  if (pi.arms() != b.arms())
    throw std::invalid_argument("step: arm count mismatch");
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("step: eta must be positive and finite");
}

}  // namespace

StepReport eg_step(const BanditInstance& b, const PolicySimplex& pi, double eta) {
  check_args(b, pi, eta);
  const Vec u = advantages(b, pi);
  Vec boost(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    boost[i] = eta * std::max(u[i], 0.0);
  return exponentiated_step(b, pi, u, boost);
}

StepReport dg_step(const BanditInstance& b, const PolicySimplex& pi, double eta, double alpha) {
  check_args(b, pi, eta);
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("dg_step: alpha must be positive and finite");
  const Vec u = advantages(b, pi);
  const Vec w = gate_weights(b, pi, GateSpec::dg(eta));
  Vec boost(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) boost[i] = alpha * w[i] * u[i];
  return exponentiated_step(b, pi, u, boost);
}

ConvergenceRun run_to_convergence(const BanditInstance& b, const PolicySimplex& start,
                                  const BanditStepper& step, double tol, long max_iters,
                                  long min_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("run_to_convergence: tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("run_to_convergence: max_iters must be >= 1");
  const double best = b.reward(b.optimal_arm());
  ConvergenceRun run{{}, start, false, 0};
  run.deltas.reserve(static_cast<std::size_t>(std::min(max_iters, 1L << 22)));
  PolicySimplex pi = start;
  for (long t = 0; t < max_iters; ++t) {
    const double delta = best - value(b, pi);
    run.deltas.push_back(delta);
    if (delta < tol && t >= min_iters) {
      run.converged = true;
      break;
    }
    pi = step(b, pi);
    run.iterations = t + 1;
  }
  run.final_pi = pi;
  return run;
}

double eg_rate_constant(double eta, double reward_range) {
  if (!(eta > 0.0) || !(reward_range > 0.0))
    throw std::invalid_argument("eg_rate_constant: eta and reward_range must be positive");
  return eta / (2.0 * std::exp(eta * reward_range));
}

}  // namespace dpg
