#include "dpg/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpg {

double shared_param_gradient(const SharedParamInstance& inst, double p, const GateSpec& g) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("shared_param_gradient: p must lie in (0, 1)");
  if (!(inst.branch >= 0.0) || !(inst.branch <= 1.0))
    throw std::invalid_argument("shared_param_gradient: branch must lie in [0, 1]");
  const double weights[2] = {inst.branch, 1.0 - inst.branch};
  const double rewards[2][2] = {{inst.r_safe, inst.r_good},   // context 0: a0, a1
                                {inst.r_safe, inst.r_bad}};   // context 1: a0, a1
  const double prob[2] = {1.0 - p, p};
  // d log pi / d theta for a0 and a1 under pi(a1) = sigmoid(theta).
  const double grad_log[2] = {-p, 1.0 - p};
  const double surprisal[2] = {-std::log(std::max(1.0 - p, kProbFloor)),
                               -std::log(std::max(p, kProbFloor))};
  double f = 0.0;
  for (int s = 0; s < 2; ++s) {
    const double v = prob[0] * rewards[s][0] + prob[1] * rewards[s][1];
    for (int a = 0; a < 2; ++a) {
      const double u = rewards[s][a] - v;
      double w = 1.0;
      if (g.kind == GateKind::kEg)
        w = u > 0.0 ? 1.0 : 0.0;
      else if (g.kind == GateKind::kDg)
        w = stable_sigmoid(u * surprisal[a] / g.eta);
      f += weights[s] * w * prob[a] * u * grad_log[a];
    }
  }
  return f;
}

double f_pg(const SharedParamInstance& inst, double p) {
  return shared_param_gradient(inst, p, GateSpec::pg());
}

double f_eg(const SharedParamInstance& inst, double p) {
  return shared_param_gradient(inst, p, GateSpec::eg());
}

double f_dg(const SharedParamInstance& inst, double p, double eta) {
  return shared_param_gradient(inst, p, GateSpec::dg(eta));
}

FixedPointReport find_fixed_points(const std::function<double(double)>& f, long grid_points,
                                   double lo, double hi) {
  if (grid_points < 2) throw std::invalid_argument("find_fixed_points: grid too small");
  if (!(lo < hi)) throw std::invalid_argument("find_fixed_points: need lo < hi");
  FixedPointReport rep;
  rep.negative_on_grid = true;
  rep.grid_min = std::numeric_limits<double>::infinity();
  rep.grid_max = -std::numeric_limits<double>::infinity();

  const auto refine = [&](double a, double fa, double b) {
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      mid = 0.5 * (a + b);
      const double fm = f(mid);
      if (std::abs(fm) < 1e-10) break;
      if ((fa < 0.0) == (fm < 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    FixedPoint fp;
    fp.p = mid;
    fp.f_value = f(mid);
    const double h = 1e-6;
    fp.f_prime = (f(mid + h) - f(mid - h)) / (2.0 * h);
    fp.stable = fp.f_prime < 0.0;
    rep.roots.push_back(fp);
  };

  double prev_x = lo;
  double prev_f = f(lo);
  for (long i = 0; i <= grid_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points);
    const double fx = f(x);
    rep.grid_min = std::min(rep.grid_min, fx);
    rep.grid_max = std::max(rep.grid_max, fx);
    if (fx >= 0.0) rep.negative_on_grid = false;
    if (i > 0) {
      if (fx == 0.0) {
        FixedPoint fp;
        fp.p = x;
        fp.f_value = 0.0;
        const double h = 1e-6;
        fp.f_prime = (f(x + h) - f(x - h)) / (2.0 * h);
        fp.stable = fp.f_prime < 0.0;
        rep.roots.push_back(fp);
      } else if ((prev_f < 0.0) != (fx < 0.0) && prev_f != 0.0) {
        refine(prev_x, prev_f, x);
      }
    }
    prev_x = x;
    prev_f = fx;
  }
  return rep;
}

}  // namespace dpg
