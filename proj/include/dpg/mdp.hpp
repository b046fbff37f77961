#pragma once

#include <iosfwd>
#include <string>

#include "dpg/dynamics.hpp"
#include "dpg/rng.hpp"

namespace dpg {

// Finite discounted MDP with dense transitions. Row-major layouts:
// transition(s, a, s') and reward(s, a). Every (s, a) transition row must
// be a distribution; rho is the start-state distribution.
class TabularMdp {
 public:
  TabularMdp(int n_states, int n_actions, std::vector<double> transitions,
             std::vector<double> rewards, double gamma, Vec rho);

  // Parses {"n_states", "n_actions", "gamma", "rho", "rewards",
  // "transitions"} with rewards[s][a] and transitions[s][a][s'] nested
  // arrays. Throws std::invalid_argument with a field-naming message.
  static TabularMdp from_json(std::istream& in);
  std::string to_json() const;

  int states() const { return n_states_; }
  int actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  double transition(int s, int a, int s2) const {
    return p_[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s2];
  }
  double reward(int s, int a) const {
    return r_[static_cast<std::size_t>(s) * n_actions_ + a];
  }
  const Vec& rho() const { return rho_; }
  double reward_span() const;  // max - min reward

 private:
  int n_states_;
  int n_actions_;
  std::vector<double> p_;
  std::vector<double> r_;
  double gamma_;
  Vec rho_;
};

// Per-state softmax policy parameterized by one logit row per state.
struct MdpPolicy {
  std::vector<Vec> theta;  // [state][action]

  static MdpPolicy zeros(int n_states, int n_actions);
  std::vector<Vec> probabilities() const;  // softmax row per state
};

// Exact policy evaluation: V solves (I - gamma P_pi) V = r_pi, Q and U
// follow, and d_rho is the discounted state-visitation distribution
// (normalized to sum 1).
struct EvalResult {
  Vec V;
  std::vector<Vec> Q;  // [state][action]
  std::vector<Vec> U;  // Q - V
  Vec d_rho;
};

EvalResult policy_eval(const TabularMdp& m, const MdpPolicy& pi);
EvalResult policy_eval(const TabularMdp& m, const std::vector<Vec>& pi_rows);

// rho-weighted scalar objective rho . V.
double scalar_value(const TabularMdp& m, const MdpPolicy& pi);

struct ViResult {
  Vec V;
  std::vector<Vec> Q;
  std::vector<int> greedy;    // argmax action per state
  double min_margin = 0.0;    // smallest best-vs-second Q gap over states
  bool unique_optimum = false;
  long iterations = 0;
};

// Value iteration to sup-norm tolerance; unique_optimum requires every
// state's greedy gap to clear margin_tol.
ViResult value_iteration(const TabularMdp& m, double tol = 1e-13, long max_iters = 100000,
                         double margin_tol = 1e-8);

// One exponentiated update applied in every state. value_delta is the
// measured change of rho . V; progress is the closed-form expression
//   (1/(1-gamma)) sum_s d_rho^{pi'}(s) (1/Z_s) sum_a pi(a|s) U(s,a) (e^{boost} - 1),
// which equals value_delta by the performance-difference identity.
struct MdpStepReport {
  MdpPolicy next;
  double value_delta = 0.0;
  double progress = 0.0;
};

// boost = eta * max(U, 0) per state-action.
MdpStepReport eg_mdp_step(const TabularMdp& m, const MdpPolicy& pi, double eta);
// boost = alpha * w * U with w = sigmoid(U * surprisal / eta).
MdpStepReport dg_mdp_step(const TabularMdp& m, const MdpPolicy& pi, double eta, double alpha);

// | (rho.V' - rho.V) - (1/(1-gamma)) sum_s d_rho^{pi'}(s) sum_a pi'(a|s) U^{pi}(s,a) |.
double pdl_residual(const TabularMdp& m, const MdpPolicy& from, const MdpPolicy& to);

struct MdpRun {
  std::vector<double> deltas;  // rho.V* - rho.V_t per iterate
  MdpPolicy final_policy;
  bool converged = false;      // per-state TV against the greedy optimum below tv_tol
  long iterations = 0;
  double final_tv = 0.0;
  double min_visitation = 1.0;  // smallest d_rho seen along the run
};

// Iterates the gated update (gate kEg or kDg) until the per-state total
// variation against the unique greedy optimal policy falls below tv_tol.
// min_iters keeps the run going past the stopping rule so tail fits see
// the asymptotic regime. Throws if the MDP's optimum is not unique.
MdpRun run_mdp_to_convergence(const TabularMdp& m, const MdpPolicy& start, const GateSpec& gate,
                              double alpha, double tv_tol, long max_iters, long min_iters = 0);

// Dense random instance: Dirichlet(1,...,1) transition rows, rewards
// uniform on [0, 1], uniform rho.
TabularMdp random_mdp(Rng& rng, int n_states, int n_actions, double gamma);

}  // namespace dpg
