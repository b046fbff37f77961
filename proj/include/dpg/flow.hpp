#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>

#include "dpg/dynamics.hpp"

namespace dpg {

// Forward-Euler integration of the gated flow. Escape is logit parity:
// the first step after which theta(optimal) >= theta(corner), timed as
// step_index * dt (a start already at parity escapes at time 0).
struct FlowConfig {
  GateSpec gate;
  double dt = 1.0;
  double max_time = 1e7;
  long record_every = 1;      // snapshot cadence in steps; start and end always kept
  bool stop_on_escape = true;
  int escape_optimal = 0;     // arm whose logit must catch up
  int escape_corner = 1;      // arm it must catch
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vec> thetas;
  std::vector<Vec> pis;
  std::vector<double> values;
  bool escaped = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  long steps = 0;  // Euler steps actually taken
};

// Throws std::runtime_error (with the step index) if the drift goes
// non-finite; throws std::invalid_argument on bad configuration.
TrajectoryRecord integrate(const BanditInstance& b, const Logits& theta0, const FlowConfig& cfg);

// First recorded time with theta(optimal) >= theta(corner), if any.
std::optional<double> detect_escape(const TrajectoryRecord& traj, int optimal, int corner);

struct SweepRow {
  std::string method;
  double gap = 0.0;
  double inv_gap = 0.0;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  bool escaped = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;        // method-major, then gap order as given
  std::vector<std::string> errors;   // integration aborts, one message per failed row
};

// Escape-time sweep over reward gaps for each gate. Instance per row:
// rewards (1, 1 - gap, 0), start logits theta0, escape of arm 0 versus
// arm 1. Rows run in parallel; results keep deterministic order.
SweepResult gap_sweep(const std::vector<double>& gaps, const Vec& theta0,
                      const std::vector<GateSpec>& gates, double dt, double max_time);

// Header: method,gap,inv_gap,escape_time,escaped. Doubles are shortest
// round-trip, escape_time of a censored row is "nan".
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace dpg
