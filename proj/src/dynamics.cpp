#include "dpg/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace dpg {

GateSpec GateSpec::dg(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("GateSpec: eta must be positive and finite");
  return {GateKind::kDg, eta};
}

std::string GateSpec::name() const {
  switch (kind) {
    case GateKind::kPg: return "pg";
    case GateKind::kEg: return "eg";
    case GateKind::kDg: return "dg";
  }
  throw std::logic_error("GateSpec: bad kind");
}

GateSpec gate_from_name(const std::string& name, double eta) {
  if (name == "pg") return GateSpec::pg();
  if (name == "eg") return GateSpec::eg();
  if (name == "dg") return GateSpec::dg(eta);
  throw std::invalid_argument("gate_from_name: unknown gate '" + name + "'");
}

double stable_sigmoid(double x) {
  // Two-branch form: never exponentiates a positive argument.
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec gate_weights(const BanditInstance& b, const PolicySimplex& pi, const GateSpec& g) {
  if (pi.arms() != b.arms())
    throw std::invalid_argument("gate_weights: arm count mismatch");
  const Vec u = advantages(b, pi);
  Vec w(u.size());
  for (int a = 0; a < b.arms(); ++a) {
    const auto i = static_cast<std::size_t>(a);
    switch (g.kind) {
      case GateKind::kPg:
        w[i] = 1.0;
        break;
      case GateKind::kEg:
        w[i] = u[i] > 0.0 ? 1.0 : 0.0;
        break;
      case GateKind::kDg:
        w[i] = stable_sigmoid(u[i] * pi.surprisal(a) / g.eta);
        break;
    }
  }
  return w;
}

Vec drift_at(const BanditInstance& b, const PolicySimplex& pi, const GateSpec& g) {
  const Vec u = advantages(b, pi);
  const Vec w = gate_weights(b, pi, g);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * pi[static_cast<int>(i)] * u[i];
  Vec d(u.size());
  for (int a = 0; a < b.arms(); ++a) {
    const auto i = static_cast<std::size_t>(a);
    d[i] = pi[a] * (w[i] * u[i] - s);
  }
  return d;
}

Vec drift(const BanditInstance& b, const Logits& theta, const GateSpec& g) {
  return drift_at(b, softmax(theta), g);
}

LogitGapTerms logit_gap(const BanditInstance& b, const PolicySimplex& pi,
                        const GateSpec& g, int a, int arm_b) {
  if (a < 0 || a >= b.arms() || arm_b < 0 || arm_b >= b.arms())
    throw std::invalid_argument("logit_gap: arm index out of range");
  const Vec u = advantages(b, pi);
  const Vec w = gate_weights(b, pi, g);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * pi[static_cast<int>(i)] * u[i];
  LogitGapTerms t;
  t.weighted_sum = s;
  const auto ia = static_cast<std::size_t>(a);
  const auto ib = static_cast<std::size_t>(arm_b);
  t.direct = w[ia] * pi[a] * u[ia] - w[ib] * pi[arm_b] * u[ib];
  t.indirect = (pi[arm_b] - pi[a]) * s;
  t.total = t.direct + t.indirect;
  return t;
}

bool pg_bad_region_test(const BanditInstance& b, const PolicySimplex& pi) {
  if (b.arms() != 3)
    throw std::invalid_argument("pg_bad_region_test: requires exactly 3 arms");
  if (!b.rewards_distinct())
    throw std::invalid_argument("pg_bad_region_test: requires distinct rewards");
  if (pi.arms() != 3)
    throw std::invalid_argument("pg_bad_region_test: arm count mismatch");
  const auto order = b.descending_order();
  const int best = order[0], mid = order[1], worst = order[2];
  const double ratio = pi[best] / std::max(pi[worst], kProbFloor);
  const double threshold = b.gap(mid, worst) / (2.0 * b.gap(best, mid));
  return ratio < threshold;
}

}  // namespace dpg
