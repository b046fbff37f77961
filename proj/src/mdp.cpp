#include "dpg/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <limits>
#include <stdexcept>

namespace dpg {

namespace {

void check_distribution(const std::vector<double>& x, std::size_t begin, std::size_t count,
                        const std::string& what) {
  double sum = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) {
    if (!std::isfinite(x[i]) || x[i] < 0.0)
      throw std::invalid_argument(what + ": entries must be finite and nonnegative");
    sum += x[i];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(what + ": entries must sum to 1");
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, std::vector<double> transitions,
                       std::vector<double> rewards, double gamma, Vec rho)
    : n_states_(n_states),
      n_actions_(n_actions),
      p_(std::move(transitions)),
      r_(std::move(rewards)),
      gamma_(gamma),
      rho_(std::move(rho)) {
  if (n_states_ < 1) throw std::invalid_argument("TabularMdp: n_states must be >= 1");
  if (n_actions_ < 2) throw std::invalid_argument("TabularMdp: n_actions must be >= 2");
  const auto s = static_cast<std::size_t>(n_states_);
  const auto a = static_cast<std::size_t>(n_actions_);
  if (p_.size() != s * a * s) throw std::invalid_argument("TabularMdp: transitions size mismatch");
  if (r_.size() != s * a) throw std::invalid_argument("TabularMdp: rewards size mismatch");
  if (rho_.size() != s) throw std::invalid_argument("TabularMdp: rho size mismatch");
  if (!(gamma_ >= 0.0) || !(gamma_ < 1.0))
    throw std::invalid_argument("TabularMdp: gamma must lie in [0, 1)");
  for (double r : r_)
    if (!std::isfinite(r)) throw std::invalid_argument("TabularMdp: rewards must be finite");
  for (int si = 0; si < n_states_; ++si)
    for (int ai = 0; ai < n_actions_; ++ai)
      check_distribution(p_, (static_cast<std::size_t>(si) * a + ai) * s, s,
                         "TabularMdp: transition row");
  check_distribution(rho_, 0, s, "TabularMdp: rho");
}

double TabularMdp::reward_span() const {
  const auto [lo, hi] = std::minmax_element(r_.begin(), r_.end());
  return *hi - *lo;
}

TabularMdp TabularMdp::from_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("mdp json: parse error: ") + e.what());
  }
  const auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      throw std::invalid_argument(std::string("mdp json: missing field '") + key + "'");
    return j.at(key);
  };
  try {
    const int s = need("n_states").get<int>();
    const int a = need("n_actions").get<int>();
    const double gamma = need("gamma").get<double>();
    const auto rho = need("rho").get<std::vector<double>>();
    const auto rewards_nested = need("rewards").get<std::vector<std::vector<double>>>();
    const auto transitions_nested =
        need("transitions").get<std::vector<std::vector<std::vector<double>>>>();
    if (static_cast<int>(rewards_nested.size()) != s)
      throw std::invalid_argument("mdp json: rewards must have n_states rows");
    if (static_cast<int>(transitions_nested.size()) != s)
      throw std::invalid_argument("mdp json: transitions must have n_states rows");
    std::vector<double> r, p;
    for (const auto& row : rewards_nested) {
      if (static_cast<int>(row.size()) != a)
        throw std::invalid_argument("mdp json: rewards row must have n_actions entries");
      r.insert(r.end(), row.begin(), row.end());
    }
    for (const auto& per_state : transitions_nested) {
      if (static_cast<int>(per_state.size()) != a)
        throw std::invalid_argument("mdp json: transitions[s] must have n_actions rows");
      for (const auto& row : per_state) {
        if (static_cast<int>(row.size()) != s)
          throw std::invalid_argument("mdp json: transitions[s][a] must have n_states entries");
        p.insert(p.end(), row.begin(), row.end());
      }
    }
    return TabularMdp(s, a, std::move(p), std::move(r), gamma, rho);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("mdp json: bad field type: ") + e.what());
  }
}

std::string TabularMdp::to_json() const {
  nlohmann::json j;
  j["n_states"] = n_states_;
  j["n_actions"] = n_actions_;
  j["gamma"] = gamma_;
  j["rho"] = rho_;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<std::vector<double>>> transitions;
  for (int s = 0; s < n_states_; ++s) {
    std::vector<double> row;
    std::vector<std::vector<double>> per_state;
    for (int a = 0; a < n_actions_; ++a) {
      row.push_back(reward(s, a));
      std::vector<double> dist;
      for (int s2 = 0; s2 < n_states_; ++s2) dist.push_back(transition(s, a, s2));
      per_state.push_back(std::move(dist));
    }
    rewards.push_back(std::move(row));
    transitions.push_back(std::move(per_state));
  }
  j["rewards"] = rewards;
  j["transitions"] = transitions;
  return j.dump(2);
}

MdpPolicy MdpPolicy::zeros(int n_states, int n_actions) {
  if (n_states < 1 || n_actions < 2)
    throw std::invalid_argument("MdpPolicy: bad shape");
  MdpPolicy p;
  p.theta.assign(static_cast<std::size_t>(n_states),
                 Vec(static_cast<std::size_t>(n_actions), 0.0));
  return p;
}

std::vector<Vec> MdpPolicy::probabilities() const {
  std::vector<Vec> rows;
  rows.reserve(theta.size());
  for (const auto& t : theta) rows.push_back(softmax(Logits(t)).probs());
  return rows;
}

namespace {

void check_policy_shape(const TabularMdp& m, const std::vector<Vec>& rows, const char* what) {
  if (static_cast<int>(rows.size()) != m.states())
    throw std::invalid_argument(std::string(what) + ": state count mismatch");
  for (const auto& row : rows)
    if (static_cast<int>(row.size()) != m.actions())
      throw std::invalid_argument(std::string(what) + ": action count mismatch");
}

}  // namespace

EvalResult policy_eval(const TabularMdp& m, const std::vector<Vec>& pi_rows) {
  check_policy_shape(m, pi_rows, "policy_eval");
  const int S = m.states();
  const int A = m.actions();
  Eigen::MatrixXd p_pi(S, S);
  Eigen::VectorXd r_pi(S);
  for (int s = 0; s < S; ++s) {
    r_pi(s) = 0.0;
    for (int s2 = 0; s2 < S; ++s2) p_pi(s, s2) = 0.0;
    for (int a = 0; a < A; ++a) {
      const double pa = pi_rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      r_pi(s) += pa * m.reward(s, a);
      for (int s2 = 0; s2 < S; ++s2) p_pi(s, s2) += pa * m.transition(s, a, s2);
    }
  }
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(S, S) - m.gamma() * p_pi;
  const Eigen::VectorXd v = sys.partialPivLu().solve(r_pi);
  Eigen::VectorXd rho(S);
  for (int s = 0; s < S; ++s) rho(s) = m.rho()[static_cast<std::size_t>(s)];
  // Occupancy x solves (I - gamma P^T) x = rho; d = (1 - gamma) x sums to 1.
  const Eigen::VectorXd x = sys.transpose().partialPivLu().solve(rho);

  EvalResult out;
  out.V.assign(static_cast<std::size_t>(S), 0.0);
  out.d_rho.assign(static_cast<std::size_t>(S), 0.0);
  out.Q.assign(static_cast<std::size_t>(S), Vec(static_cast<std::size_t>(A), 0.0));
  out.U = out.Q;
  for (int s = 0; s < S; ++s) {
    out.V[static_cast<std::size_t>(s)] = v(s);
    out.d_rho[static_cast<std::size_t>(s)] = (1.0 - m.gamma()) * x(s);
    for (int a = 0; a < A; ++a) {
      double q = m.reward(s, a);
      for (int s2 = 0; s2 < S; ++s2) q += m.gamma() * m.transition(s, a, s2) * v(s2);
      out.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = q;
      out.U[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = q - v(s);
    }
  }
  return out;
}

EvalResult policy_eval(const TabularMdp& m, const MdpPolicy& pi) {
  return policy_eval(m, pi.probabilities());
}

double scalar_value(const TabularMdp& m, const MdpPolicy& pi) {
  const auto ev = policy_eval(m, pi);
  double v = 0.0;
  for (int s = 0; s < m.states(); ++s)
    v += m.rho()[static_cast<std::size_t>(s)] * ev.V[static_cast<std::size_t>(s)];
  return v;
}

ViResult value_iteration(const TabularMdp& m, double tol, long max_iters, double margin_tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  const int S = m.states();
  const int A = m.actions();
  ViResult out;
  out.V.assign(static_cast<std::size_t>(S), 0.0);
  Vec next(static_cast<std::size_t>(S), 0.0);
  for (long it = 0; it < max_iters; ++it) {
    double change = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        double q = m.reward(s, a);
        for (int s2 = 0; s2 < S; ++s2)
          q += m.gamma() * m.transition(s, a, s2) * out.V[static_cast<std::size_t>(s2)];
        best = std::max(best, q);
      }
      next[static_cast<std::size_t>(s)] = best;
      change = std::max(change, std::abs(best - out.V[static_cast<std::size_t>(s)]));
    }
    out.V = next;
    out.iterations = it + 1;
    if (change < tol) break;
  }
  out.Q.assign(static_cast<std::size_t>(S), Vec(static_cast<std::size_t>(A), 0.0));
  out.greedy.assign(static_cast<std::size_t>(S), 0);
  out.min_margin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int a = 0; a < A; ++a) {
      double q = m.reward(s, a);
      for (int s2 = 0; s2 < S; ++s2)
        q += m.gamma() * m.transition(s, a, s2) * out.V[static_cast<std::size_t>(s2)];
      out.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = q;
      if (q > best) {
        second = best;
        best = q;
        arg = a;
      } else if (q > second) {
        second = q;
      }
    }
    out.greedy[static_cast<std::size_t>(s)] = arg;
    out.min_margin = std::min(out.min_margin, best - second);
  }
  out.unique_optimum = out.min_margin > margin_tol;
  return out;
}

namespace {

// Gate boosts per state-action from an evaluated policy.
std::vector<Vec> step_boosts(const TabularMdp& m, const std::vector<Vec>& pi_rows,
                             const EvalResult& ev, const GateSpec& gate, double alpha) {
  std::vector<Vec> boost(pi_rows.size(), Vec(static_cast<std::size_t>(m.actions()), 0.0));
  for (int s = 0; s < m.states(); ++s) {
    for (int a = 0; a < m.actions(); ++a) {
      const double u = ev.U[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      double v = 0.0;
      if (gate.kind == GateKind::kEg) {
        v = gate.eta * std::max(u, 0.0);
      } else if (gate.kind == GateKind::kDg) {
        const double pa = std::max(pi_rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)],
                                   kProbFloor);
        v = alpha * stable_sigmoid(u * (-std::log(pa)) / gate.eta) * u;
      } else {
        throw std::invalid_argument("mdp step: gate must be eg or dg");
      }
      boost[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = v;
    }
  }
  return boost;
}

MdpPolicy apply_boosts(const MdpPolicy& pi, const std::vector<Vec>& boost) {
  MdpPolicy next = pi;
  for (std::size_t s = 0; s < next.theta.size(); ++s)
    for (std::size_t a = 0; a < next.theta[s].size(); ++a) next.theta[s][a] += boost[s][a];
  return next;
}

MdpStepReport gated_mdp_step(const TabularMdp& m, const MdpPolicy& pi, const GateSpec& gate,
                             double alpha) {
  const auto rows = pi.probabilities();
  check_policy_shape(m, rows, "mdp step");
  const auto ev = policy_eval(m, rows);
  const auto boost = step_boosts(m, rows, ev, gate, alpha);
  MdpStepReport rep{apply_boosts(pi, boost), 0.0, 0.0};
  const auto next_rows = rep.next.probabilities();
  const auto ev_next = policy_eval(m, next_rows);
  double dv = 0.0;
  for (int s = 0; s < m.states(); ++s)
    dv += m.rho()[static_cast<std::size_t>(s)] *
          (ev_next.V[static_cast<std::size_t>(s)] - ev.V[static_cast<std::size_t>(s)]);
  rep.value_delta = dv;
  // Per-state normalizer Z_s of the multiplicative update; the progress
  // term uses the old policy's advantages and the new policy's visitation.
  double progress = 0.0;
  for (int s = 0; s < m.states(); ++s) {
    const auto si = static_cast<std::size_t>(s);
    double z = 0.0;
    double inner = 0.0;
    for (int a = 0; a < m.actions(); ++a) {
      const auto ai = static_cast<std::size_t>(a);
      z += rows[si][ai] * std::exp(boost[si][ai]);
      inner += rows[si][ai] * ev.U[si][ai] * std::expm1(boost[si][ai]);
    }
    progress += ev_next.d_rho[si] / (1.0 - m.gamma()) * (inner / z);
  }
  rep.progress = progress;
  return rep;
}

}  // namespace

MdpStepReport eg_mdp_step(const TabularMdp& m, const MdpPolicy& pi, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("eg_mdp_step: eta must be positive and finite");
  return gated_mdp_step(m, pi, GateSpec{GateKind::kEg, eta}, 0.0);
}

MdpStepReport dg_mdp_step(const TabularMdp& m, const MdpPolicy& pi, double eta, double alpha) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("dg_mdp_step: eta must be positive and finite");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("dg_mdp_step: alpha must be positive and finite");
  return gated_mdp_step(m, pi, GateSpec::dg(eta), alpha);
}

double pdl_residual(const TabularMdp& m, const MdpPolicy& from, const MdpPolicy& to) {
  const auto ev_from = policy_eval(m, from);
  const auto to_rows = to.probabilities();
  check_policy_shape(m, to_rows, "pdl_residual");
  const auto ev_to = policy_eval(m, to_rows);
  double lhs = 0.0;
  for (int s = 0; s < m.states(); ++s)
    lhs += m.rho()[static_cast<std::size_t>(s)] *
           (ev_to.V[static_cast<std::size_t>(s)] - ev_from.V[static_cast<std::size_t>(s)]);
  double rhs = 0.0;
  for (int s = 0; s < m.states(); ++s) {
    const auto si = static_cast<std::size_t>(s);
    double inner = 0.0;
    for (int a = 0; a < m.actions(); ++a)
      inner += to_rows[si][static_cast<std::size_t>(a)] * ev_from.U[si][static_cast<std::size_t>(a)];
    rhs += ev_to.d_rho[si] / (1.0 - m.gamma()) * inner;
  }
  return std::abs(lhs - rhs);
}

MdpRun run_mdp_to_convergence(const TabularMdp& m, const MdpPolicy& start, const GateSpec& gate,
                              double alpha, double tv_tol, long max_iters, long min_iters) {
  if (gate.kind == GateKind::kPg)
    throw std::invalid_argument("run_mdp_to_convergence: gate must be eg or dg");
  if (!(tv_tol > 0.0)) throw std::invalid_argument("run_mdp_to_convergence: tv_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("run_mdp_to_convergence: max_iters must be >= 1");
  const auto vi = value_iteration(m);
  if (!vi.unique_optimum)
    throw std::invalid_argument("run_mdp_to_convergence: optimal policy is not unique");
  double v_star = 0.0;
  for (int s = 0; s < m.states(); ++s)
    v_star += m.rho()[static_cast<std::size_t>(s)] * vi.V[static_cast<std::size_t>(s)];

  MdpRun run{{}, start, false, 0, 0.0, 1.0};
  MdpPolicy pi = start;
  for (long t = 0; t < max_iters; ++t) {
    const auto rows = pi.probabilities();
    const auto ev = policy_eval(m, rows);
    double v = 0.0;
    for (int s = 0; s < m.states(); ++s)
      v += m.rho()[static_cast<std::size_t>(s)] * ev.V[static_cast<std::size_t>(s)];
    run.deltas.push_back(v_star - v);
    double max_tv = 0.0;
    for (int s = 0; s < m.states(); ++s) {
      const auto si = static_cast<std::size_t>(s);
      run.min_visitation = std::min(run.min_visitation, ev.d_rho[si]);
      double tv = 0.0;
      for (int a = 0; a < m.actions(); ++a) {
        const double target = a == vi.greedy[si] ? 1.0 : 0.0;
        tv += std::abs(rows[si][static_cast<std::size_t>(a)] - target);
      }
      max_tv = std::max(max_tv, 0.5 * tv);
    }
    run.final_tv = max_tv;
    if (max_tv < tv_tol && t >= min_iters) {
      run.converged = true;
      break;
    }
    const auto boost = step_boosts(m, rows, ev, gate, alpha);
    pi = apply_boosts(pi, boost);
    run.iterations = t + 1;
  }
  run.final_policy = pi;
  return run;
}

TabularMdp random_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
  if (n_states < 1 || n_actions < 2)
    throw std::invalid_argument("random_mdp: bad shape");
  const auto s = static_cast<std::size_t>(n_states);
  const auto a = static_cast<std::size_t>(n_actions);
  std::vector<double> p;
  p.reserve(s * a * s);
  std::vector<double> r;
  r.reserve(s * a);
  for (std::size_t i = 0; i < s * a; ++i) {
    const auto row = rng.dirichlet_uniform(n_states);
    p.insert(p.end(), row.begin(), row.end());
    r.push_back(rng.uniform());
  }
  return TabularMdp(n_states, n_actions, std::move(p), std::move(r), gamma,
                    Vec(s, 1.0 / n_states));
}

}  // namespace dpg
