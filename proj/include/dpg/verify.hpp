#pragma once

#include <limits>

#include "dpg/dynamics.hpp"
#include "dpg/rng.hpp"

namespace dpg {

// --- sector lower bounds -------------------------------------------------
//
// On the sector near the corner arm j ({eps = 1 - pi(j) small, pi(opt) >=
// eps / K}) the gated logit gap d/dt (theta(opt) - theta(j)) is claimed to
// stay above coeff * eps, with coeff = Delta / (4K) for the hard gate and
// Delta / (8K) for the smooth gate, Delta = r(opt) - r(j). The checkers
// sample fixed-eps shells and bracket the largest eps below which no
// sampled violation exists; the bracket is empirical, per instance.

// gap_total - coeff * eps at pi; negative means the bound is violated.
double sector_margin(const BanditInstance& b, int corner, const GateSpec& g,
                     const PolicySimplex& pi);

// Uniform point on the fixed-eps slice of the sector: pi(corner) = 1 - eps,
// the rest Dirichlet(1, ..., 1), rejected until pi(opt) >= eps / K.
PolicySimplex sample_sector_point(const BanditInstance& b, int corner, double eps, Rng& rng);

struct ShellResult {
  double eps = 0.0;
  long samples = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  Vec witness;  // pi attaining worst_margin
};

struct BoundCheckReport {
  std::string gate;
  double eta = 0.0;
  int corner = 0;
  double bound_coeff = 0.0;
  std::vector<ShellResult> shells;  // descending eps
  // Largest tested eps whose whole suffix (it and every smaller shell) is
  // violation-free; 0 when even the smallest shell violates.
  double eps0_lower = 0.0;
  // Smallest tested eps that still saw a violation; +inf when none did.
  double eps0_upper = std::numeric_limits<double>::infinity();
  bool bracket_found = false;
};

// Samples each shell in shell_eps (any order; report sorts descending).
// Gate must be kEg or kDg.
BoundCheckReport check_sector_bound(const BanditInstance& b, int corner, const GateSpec& g,
                                    const std::vector<double>& shell_eps, long samples_per_shell,
                                    Rng& rng);

// Adaptive geometric descent from eps_hi: keeps shrinking the shell until
// the three deepest shells are violation-free (or eps_floor is hit), then
// reports the bracket. When violations were seen above, eps0_lower is
// pulled one extra ladder step down so later verification inside the
// bracket stays clear of the empirical boundary.
BoundCheckReport bracket_sector_bound(const BanditInstance& b, int corner, const GateSpec& g,
                                      long samples_per_shell, Rng& rng, double eps_hi = 0.2,
                                      double eps_floor = 1e-16);

// --- polynomial suppression ----------------------------------------------
//
// For a harmful arm (U(k) < 0) the smooth gate is polynomially small in
// pi(k): w(k) <= pi(k)^{|U(k)| / eta}. Both sides are evaluated through
// the same exponent x = U(k) * surprisal(k) / eta, so the comparison
// sigmoid(x) <= exp(x) is exact even in floating point. The product
// variant checks w(k) pi(k) <= pi(k)^{1 + Delta/(2 eta)} whenever
// |U(k)| >= Delta / 2 against the corner arm, sampled with strict margin.

struct SuppressionReport {
  long samples = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  long product_samples = 0;
  long product_violations = 0;
  double product_worst_margin = std::numeric_limits<double>::infinity();
};

SuppressionReport check_poly_suppression(long n_samples, Rng& rng);

// --- drift-sign region maps ----------------------------------------------
//
// Fraction of the simplex near a corner where the gated flow still moves
// the optimal arm's logit down relative to the corner arm's
// (gap_total <= 0, a "bad" point).

struct RegionShell {
  double eps = 0.0;
  long cells = 0;
  long bad = 0;
  double fraction = 0.0;  // bad / cells; 0 when cells == 0
};

struct RegionMap {
  int corner = 0;
  long resolution = 0;  // grid maps only
  long cells = 0;
  long bad = 0;
  double overall_fraction = 0.0;
  std::vector<RegionShell> shells;
};

// K = 3 exhaustive map: barycentric grid with cell centers
// ((i + 0.5)/N, (j + 0.5)/N) over the two non-corner arms, valid when
// i + j <= N - 2. A cell joins shell eps when its smallest corner-escape
// mass (i + j)/N is below eps, so even shells finer than one cell stay
// populated.
RegionMap map_bad_region(const BanditInstance& b, const GateSpec& g, int corner, long resolution,
                         const std::vector<double>& shell_eps);

// Any K: per shell, uniform samples of the region {1 - pi(corner) < eps}.
RegionMap map_bad_region_sampled(const BanditInstance& b, const GateSpec& g, int corner,
                                 const std::vector<double>& shell_eps, long samples_per_shell,
                                 Rng& rng);

// --- rate fits -------------------------------------------------------------

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
// Least squares on (log x, log y); requires positive entries.
LinFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct RateFit {
  double slope = 0.0;      // of 1/delta against t on the trailing half
  double intercept = 0.0;
  double r_squared = 0.0;
  long t0 = 0;             // first index of the fitted tail
  // Exponential-looking tail: log delta against t fits better than the
  // reciprocal model does, so the decay beats 1/t.
  bool super_reciprocal = false;
};

// Reciprocal-law fit on the trailing half of a positive gap series;
// requires at least 40 entries.
RateFit fit_rate(const std::vector<double>& deltas);

}  // namespace dpg
