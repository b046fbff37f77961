#include "dpg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpg {

namespace {

double bound_coeff(const BanditInstance& b, int corner, const GateSpec& g) {
  if (corner == b.optimal_arm())
    throw std::invalid_argument("sector bound: corner must not be the optimal arm");
  const double delta = b.gap(b.optimal_arm(), corner);
  if (!(delta > 0.0))
    throw std::invalid_argument("sector bound: optimal arm must strictly beat the corner arm");
  switch (g.kind) {
    case GateKind::kEg:
      return delta / (4.0 * b.arms());
    case GateKind::kDg:
      return delta / (8.0 * b.arms());
    case GateKind::kPg:
      break;
  }
  throw std::invalid_argument("sector bound: gate must be eg or dg");
}

}  // namespace

double sector_margin(const BanditInstance& b, int corner, const GateSpec& g,
                     const PolicySimplex& pi) {
  const double coeff = bound_coeff(b, corner, g);
  const double eps = 1.0 - pi[corner];
  const auto terms = logit_gap(b, pi, g, b.optimal_arm(), corner);
  return terms.total - coeff * eps;
}

PolicySimplex sample_sector_point(const BanditInstance& b, int corner, double eps, Rng& rng) {
  if (corner < 0 || corner >= b.arms())
    throw std::invalid_argument("sample_sector_point: corner out of range");
  if (corner == b.optimal_arm())
    throw std::invalid_argument("sample_sector_point: corner must not be the optimal arm");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("sample_sector_point: eps must lie in (0, 1)");
  const int k = b.arms();
  const int opt = b.optimal_arm();
  const double floor_opt = eps / k;
  for (int tries = 0; tries < 100000; ++tries) {
    const auto split = rng.dirichlet_uniform(k - 1);
    Vec pi(static_cast<std::size_t>(k), 0.0);
    pi[static_cast<std::size_t>(corner)] = 1.0 - eps;
    int slot = 0;
    for (int a = 0; a < k; ++a) {
      if (a == corner) continue;
      pi[static_cast<std::size_t>(a)] = eps * split[static_cast<std::size_t>(slot++)];
    }
    if (pi[static_cast<std::size_t>(opt)] >= floor_opt)
      return PolicySimplex::from_probabilities(std::move(pi));
  }
  throw std::runtime_error("sample_sector_point: rejection sampling stalled");
}

BoundCheckReport check_sector_bound(const BanditInstance& b, int corner, const GateSpec& g,
                                    const std::vector<double>& shell_eps, long samples_per_shell,
                                    Rng& rng) {
  if (shell_eps.empty()) throw std::invalid_argument("check_sector_bound: no shells");
  if (samples_per_shell < 1)
    throw std::invalid_argument("check_sector_bound: samples_per_shell must be >= 1");
  BoundCheckReport rep;
  rep.gate = g.name();
  rep.eta = g.kind == GateKind::kDg ? g.eta : 0.0;
  rep.corner = corner;
  rep.bound_coeff = bound_coeff(b, corner, g);

  std::vector<double> eps_sorted = shell_eps;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());
  long shell_index = 0;
  for (double eps : eps_sorted) {
    ShellResult shell;
    shell.eps = eps;
    Rng shell_rng = rng.split(static_cast<std::uint64_t>(shell_index++));
    for (long i = 0; i < samples_per_shell; ++i) {
      const auto pi = sample_sector_point(b, corner, eps, shell_rng);
      const double margin = sector_margin(b, corner, g, pi);
      ++shell.samples;
      if (margin < shell.worst_margin) {
        shell.worst_margin = margin;
        shell.witness = pi.probs();
      }
      if (margin < 0.0) ++shell.violations;
    }
    rep.shells.push_back(std::move(shell));
  }

  // eps0_lower: start of the longest violation-free suffix (smallest eps end).
  for (auto it = rep.shells.rbegin(); it != rep.shells.rend(); ++it) {
    if (it->violations > 0) break;
    rep.eps0_lower = it->eps;
    rep.bracket_found = true;
  }
  for (const auto& shell : rep.shells)
    if (shell.violations > 0) rep.eps0_upper = std::min(rep.eps0_upper, shell.eps);
  return rep;
}

BoundCheckReport bracket_sector_bound(const BanditInstance& b, int corner, const GateSpec& g,
                                      long samples_per_shell, Rng& rng, double eps_hi,
                                      double eps_floor) {
  if (!(eps_hi > 0.0) || !(eps_hi < 1.0))
    throw std::invalid_argument("bracket_sector_bound: eps_hi must lie in (0, 1)");
  if (!(eps_floor > 0.0) || !(eps_floor < eps_hi))
    throw std::invalid_argument("bracket_sector_bound: eps_floor must lie in (0, eps_hi)");
  constexpr double kLadderFactor = 0.4;
  constexpr int kMinShells = 6;
  constexpr int kCleanTail = 3;

  std::vector<double> ladder;
  std::vector<ShellResult> shells;
  int clean_tail = 0;
  double eps = eps_hi;
  Rng local = rng.split(0x5ec7ULL);
  long shell_index = 0;
  while (true) {
    ladder.push_back(eps);
    Rng shell_rng = local.split(static_cast<std::uint64_t>(shell_index++));
    ShellResult shell;
    shell.eps = eps;
    for (long i = 0; i < samples_per_shell; ++i) {
      const auto pi = sample_sector_point(b, corner, eps, shell_rng);
      const double margin = sector_margin(b, corner, g, pi);
      ++shell.samples;
      if (margin < shell.worst_margin) {
        shell.worst_margin = margin;
        shell.witness = pi.probs();
      }
      if (margin < 0.0) ++shell.violations;
    }
    clean_tail = shell.violations == 0 ? clean_tail + 1 : 0;
    shells.push_back(std::move(shell));
    if (static_cast<int>(shells.size()) >= kMinShells && clean_tail >= kCleanTail) break;
    eps *= kLadderFactor;
    if (eps < eps_floor) break;
  }

  BoundCheckReport rep;
  rep.gate = g.name();
  rep.eta = g.kind == GateKind::kDg ? g.eta : 0.0;
  rep.corner = corner;
  rep.bound_coeff = bound_coeff(b, corner, g);
  rep.shells = std::move(shells);
  for (auto it = rep.shells.rbegin(); it != rep.shells.rend(); ++it) {
    if (it->violations > 0) break;
    rep.eps0_lower = it->eps;
    rep.bracket_found = true;
  }
  bool saw_violation = false;
  for (const auto& shell : rep.shells)
    if (shell.violations > 0) {
      saw_violation = true;
      rep.eps0_upper = std::min(rep.eps0_upper, shell.eps);
    }
  // Back off one ladder step from an observed boundary.
  if (rep.bracket_found && saw_violation) rep.eps0_lower *= kLadderFactor;
  return rep;
}

SuppressionReport check_poly_suppression(long n_samples, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("check_poly_suppression: n_samples must be >= 1");
  SuppressionReport rep;
  std::uint64_t draw = 0;
  while (rep.samples < n_samples) {
    Rng r = rng.split(draw++);
    const int k = r.uniform_int(2, 8);
    Vec rewards(static_cast<std::size_t>(k));
    for (auto& v : rewards) v = r.uniform();
    const BanditInstance b(rewards);
    const auto pi = PolicySimplex::from_probabilities(r.dirichlet_uniform(k));
    const double eta = std::exp(r.uniform(std::log(0.05), std::log(5.0)));
    const Vec u = advantages(b, pi);
    const int corner =
        static_cast<int>(std::max_element(pi.probs().begin(), pi.probs().end()) -
                         pi.probs().begin());
    for (int a = 0; a < k && rep.samples < n_samples; ++a) {
      const auto ai = static_cast<std::size_t>(a);
      if (u[ai] >= 0.0) continue;
      const double x = u[ai] * pi.surprisal(a) / eta;
      const double w = stable_sigmoid(x);
      const double bound = std::exp(x);  // pi(a)^{|U(a)|/eta} through the same exponent
      ++rep.samples;
      const double margin = bound - w;
      rep.worst_margin = std::min(rep.worst_margin, margin);
      if (margin < 0.0) ++rep.violations;

      if (a == corner) continue;
      const double delta = b.gap(corner, a);
      // Product variant needs the corner arm strictly better and the
      // advantage past half the gap with slack, away from ulp ties.
      if (!(delta > 0.0) || !(-u[ai] >= 0.5 * delta * (1.0 + 1e-9))) continue;
      const double exponent = 1.0 + delta / (2.0 * eta);
      const double product_bound = std::exp(-exponent * pi.surprisal(a));
      const double product = w * pi.floored(a);
      ++rep.product_samples;
      const double pmargin = product_bound - product;
      rep.product_worst_margin = std::min(rep.product_worst_margin, pmargin);
      if (pmargin < 0.0) ++rep.product_violations;
    }
  }
  return rep;
}

namespace {

void add_shell_counts(RegionMap& map, const std::vector<double>& shell_eps) {
  std::vector<double> sorted = shell_eps;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (double eps : sorted) {
    RegionShell s;
    s.eps = eps;
    map.shells.push_back(s);
  }
}

}  // namespace

RegionMap map_bad_region(const BanditInstance& b, const GateSpec& g, int corner, long resolution,
                         const std::vector<double>& shell_eps) {
  if (b.arms() != 3) throw std::invalid_argument("map_bad_region: requires exactly 3 arms");
  if (corner < 0 || corner >= 3) throw std::invalid_argument("map_bad_region: corner out of range");
  if (resolution < 2) throw std::invalid_argument("map_bad_region: resolution must be >= 2");
  const int opt = b.optimal_arm();
  if (corner == opt)
    throw std::invalid_argument("map_bad_region: corner must not be the optimal arm");
  int lo = -1, hi = -1;
  for (int a = 0; a < 3; ++a) {
    if (a == corner) continue;
    if (lo < 0)
      lo = a;
    else
      hi = a;
  }
  RegionMap map;
  map.corner = corner;
  map.resolution = resolution;
  add_shell_counts(map, shell_eps);
  const auto n = resolution;
  for (long i = 0; i + 1 < n; ++i) {
    for (long j = 0; i + j <= n - 2; ++j) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      const double y = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      Vec pv(3, 0.0);
      pv[static_cast<std::size_t>(lo)] = x;
      pv[static_cast<std::size_t>(hi)] = y;
      pv[static_cast<std::size_t>(corner)] = 1.0 - x - y;
      const auto pi = PolicySimplex::from_probabilities(std::move(pv));
      const bool bad = logit_gap(b, pi, g, opt, corner).total <= 0.0;
      ++map.cells;
      if (bad) ++map.bad;
      const double eps_min = static_cast<double>(i + j) / static_cast<double>(n);
      for (auto& shell : map.shells) {
        if (eps_min < shell.eps) {
          ++shell.cells;
          if (bad) ++shell.bad;
        }
      }
    }
  }
  map.overall_fraction = map.cells > 0 ? static_cast<double>(map.bad) / map.cells : 0.0;
  for (auto& shell : map.shells)
    shell.fraction = shell.cells > 0 ? static_cast<double>(shell.bad) / shell.cells : 0.0;
  return map;
}

RegionMap map_bad_region_sampled(const BanditInstance& b, const GateSpec& g, int corner,
                                 const std::vector<double>& shell_eps, long samples_per_shell,
                                 Rng& rng) {
  if (corner < 0 || corner >= b.arms())
    throw std::invalid_argument("map_bad_region_sampled: corner out of range");
  const int opt = b.optimal_arm();
  if (corner == opt)
    throw std::invalid_argument("map_bad_region_sampled: corner must not be the optimal arm");
  if (samples_per_shell < 1)
    throw std::invalid_argument("map_bad_region_sampled: samples_per_shell must be >= 1");
  RegionMap map;
  map.corner = corner;
  add_shell_counts(map, shell_eps);
  const int k = b.arms();
  long shell_index = 0;
  for (auto& shell : map.shells) {
    Rng shell_rng = rng.split(static_cast<std::uint64_t>(shell_index++));
    for (long s = 0; s < samples_per_shell; ++s) {
      // Uniform over the region {1 - pi(corner) < eps}: the escaped mass
      // has density proportional to eps^{k-2} there.
      const double eps =
          shell.eps * std::pow(shell_rng.uniform(), 1.0 / static_cast<double>(k - 1));
      const auto split = shell_rng.dirichlet_uniform(k - 1);
      Vec pv(static_cast<std::size_t>(k), 0.0);
      pv[static_cast<std::size_t>(corner)] = 1.0 - eps;
      int slot = 0;
      for (int a = 0; a < k; ++a) {
        if (a == corner) continue;
        pv[static_cast<std::size_t>(a)] = eps * split[static_cast<std::size_t>(slot++)];
      }
      const auto pi = PolicySimplex::from_probabilities(std::move(pv));
      const bool bad = logit_gap(b, pi, g, opt, corner).total <= 0.0;
      ++shell.cells;
      ++map.cells;
      if (bad) {
        ++shell.bad;
        ++map.bad;
      }
    }
    shell.fraction = shell.cells > 0 ? static_cast<double>(shell.bad) / shell.cells : 0.0;
  }
  map.overall_fraction = map.cells > 0 ? static_cast<double>(map.bad) / map.cells : 0.0;
  return map;
}

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need at least 2 matching points");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("linear_fit: x values are all equal");
  LinFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += e * e;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  } else {
    fit.r_squared = 1.0;
  }
  return fit;
}

LinFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_fit: need at least 2 matching points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("loglog_fit: entries must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

RateFit fit_rate(const std::vector<double>& deltas) {
  if (deltas.size() < 40)
    throw std::invalid_argument("fit_rate: need at least 40 iterates");
  const auto t0 = static_cast<long>(deltas.size() / 2);
  std::vector<double> t, recip, logd;
  for (std::size_t i = static_cast<std::size_t>(t0); i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0))
      throw std::invalid_argument("fit_rate: gaps must stay positive");
    t.push_back(static_cast<double>(i));
    recip.push_back(1.0 / deltas[i]);
    logd.push_back(std::log(deltas[i]));
  }
  const LinFit reciprocal = linear_fit(t, recip);
  const LinFit exponential = linear_fit(t, logd);
  RateFit fit;
  fit.slope = reciprocal.slope;
  fit.intercept = reciprocal.intercept;
  fit.r_squared = reciprocal.r_squared;
  fit.t0 = t0;
  fit.super_reciprocal =
      exponential.r_squared > 0.995 && exponential.r_squared > reciprocal.r_squared;
  return fit;
}

}  // namespace dpg
