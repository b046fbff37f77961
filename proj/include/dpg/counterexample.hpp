#pragma once

#include <functional>
#include <vector>

#include "dpg/dynamics.hpp"

namespace dpg {

// Two contexts sharing a single Bernoulli parameter p = sigmoid(theta):
// action 1 earns r_good in the first context but r_bad in the second,
// action 0 earns r_safe in both, and the contexts occur with probability
// (branch, 1 - branch). With r_bad << 0 the ungated ascent direction is
// negative everywhere, while gating the harmful context's pull creates an
// interior attractor: a stable fixed point at small positive p.
struct SharedParamInstance {
  double r_good = 10.0;
  double r_bad = -100.0;
  double r_safe = 0.0;
  double branch = 0.5;
};

// d(objective)/d(theta) at p, with the chosen gate applied per
// context-action term. p must lie strictly inside (0, 1).
double shared_param_gradient(const SharedParamInstance& inst, double p, const GateSpec& g);

// Convenience wrappers for the three gates.
double f_pg(const SharedParamInstance& inst, double p);
double f_eg(const SharedParamInstance& inst, double p);
double f_dg(const SharedParamInstance& inst, double p, double eta);

struct FixedPoint {
  double p = 0.0;
  double f_value = 0.0;
  double f_prime = 0.0;  // central difference, h = 1e-6
  bool stable = false;   // f_prime < 0
};

struct FixedPointReport {
  std::vector<FixedPoint> roots;
  bool negative_on_grid = false;  // F < 0 at every grid point
  double grid_min = 0.0;
  double grid_max = 0.0;
};

// Scans F on a uniform grid over [lo, hi], then refines each sign change
// by bisection until |F| < 1e-10 or the interval is exhausted.
FixedPointReport find_fixed_points(const std::function<double(double)>& f, long grid_points = 10000,
                                   double lo = 0.001, double hi = 0.999);

}  // namespace dpg
