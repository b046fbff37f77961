#include "dpg/flow.hpp"

#include <cmath>
#include <future>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "dpg/io.hpp"

namespace dpg {

TrajectoryRecord integrate(const BanditInstance& b, const Logits& theta0, const FlowConfig& cfg) {
  if (theta0.arms() != b.arms())
    throw std::invalid_argument("integrate: arm count mismatch");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw std::invalid_argument("integrate: dt must be positive and finite");
  if (!(cfg.max_time >= cfg.dt))
    throw std::invalid_argument("integrate: max_time must be >= dt");
  if (cfg.record_every < 1)
    throw std::invalid_argument("integrate: record_every must be >= 1");
  const int k = b.arms();
  if (cfg.escape_optimal < 0 || cfg.escape_optimal >= k || cfg.escape_corner < 0 ||
      cfg.escape_corner >= k || cfg.escape_optimal == cfg.escape_corner)
    throw std::invalid_argument("integrate: bad escape arm indices");

  TrajectoryRecord traj;
  Vec theta = theta0.theta;
  const auto record = [&](double t) {
    PolicySimplex pi = softmax(Logits(theta));
    traj.times.push_back(t);
    traj.thetas.push_back(theta);
    traj.pis.push_back(pi.probs());
    traj.values.push_back(value(b, pi));
  };
  record(0.0);
  const auto at_parity = [&] {
    return theta[static_cast<std::size_t>(cfg.escape_optimal)] >=
           theta[static_cast<std::size_t>(cfg.escape_corner)];
  };
  if (at_parity()) {
    traj.escaped = true;
    traj.escape_time = 0.0;
    return traj;
  }

  const auto max_steps = static_cast<long>(cfg.max_time / cfg.dt + 1e-9);
  for (long step = 0; step < max_steps; ++step) {
    const Vec d = drift(b, Logits(theta), cfg.gate);
    for (double di : d)
      if (!std::isfinite(di))
        throw std::runtime_error("integrate: non-finite drift at step " + std::to_string(step));
    for (std::size_t a = 0; a < theta.size(); ++a) theta[a] += cfg.dt * d[a];
    traj.steps = step + 1;
    const double t = static_cast<double>(step + 1) * cfg.dt;
    if (!traj.escaped && at_parity()) {
      traj.escaped = true;
      // Escape is stamped with the index of the step that produced it.
      traj.escape_time = static_cast<double>(step) * cfg.dt;
      if (cfg.stop_on_escape) break;
    }
    if ((step + 1) % cfg.record_every == 0) record(t);
  }
  if (traj.times.back() != static_cast<double>(traj.steps) * cfg.dt)
    record(static_cast<double>(traj.steps) * cfg.dt);
  return traj;
}

std::optional<double> detect_escape(const TrajectoryRecord& traj, int optimal, int corner) {
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& th = traj.thetas[i];
    if (optimal < 0 || corner < 0 || th.size() <= static_cast<std::size_t>(optimal) ||
        th.size() <= static_cast<std::size_t>(corner))
      throw std::invalid_argument("detect_escape: arm index out of range");
    if (th[static_cast<std::size_t>(optimal)] >= th[static_cast<std::size_t>(corner)])
      return traj.times[i];
  }
  return std::nullopt;
}

SweepResult gap_sweep(const std::vector<double>& gaps, const Vec& theta0,
                      const std::vector<GateSpec>& gates, double dt, double max_time) {
  if (gaps.empty()) throw std::invalid_argument("gap_sweep: no gaps");
  if (gates.empty()) throw std::invalid_argument("gap_sweep: no gates");
  for (double g : gaps)
    if (!(g > 0.0) || !(g < 1.0))
      throw std::invalid_argument("gap_sweep: gaps must lie in (0, 1)");
  if (theta0.size() != 3)
    throw std::invalid_argument("gap_sweep: theta0 must have 3 entries");

  struct RowOut {
    SweepRow row;
    std::string error;
  };
  const auto run_row = [&](const GateSpec& gate, double gap) -> RowOut {
    RowOut out;
    out.row.method = gate.name();
    out.row.gap = gap;
    out.row.inv_gap = 1.0 / gap;
    FlowConfig cfg;
    cfg.gate = gate;
    cfg.dt = dt;
    cfg.max_time = max_time;
    cfg.record_every = std::numeric_limits<long>::max();
    cfg.stop_on_escape = true;
    cfg.escape_optimal = 0;
    cfg.escape_corner = 1;
    try {
      const BanditInstance b({1.0, 1.0 - gap, 0.0});
      const auto traj = integrate(b, Logits(theta0), cfg);
      out.row.escaped = traj.escaped;
      out.row.escape_time = traj.escape_time;
    } catch (const std::exception& e) {
      out.error = out.row.method + " gap " + format_double(gap) + ": " + e.what();
    }
    return out;
  };

  std::vector<std::pair<GateSpec, double>> jobs;
  for (const auto& gate : gates)
    for (double gap : gaps) jobs.emplace_back(gate, gap);

  std::vector<std::future<RowOut>> futures;
  futures.reserve(jobs.size());
  for (const auto& [gate, gap] : jobs)
    futures.push_back(std::async(std::launch::async, run_row, gate, gap));

  SweepResult result;
  for (auto& f : futures) {
    RowOut out = f.get();
    result.rows.push_back(std::move(out.row));
    if (!out.error.empty()) result.errors.push_back(std::move(out.error));
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "method,gap,inv_gap,escape_time,escaped\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_double(r.gap) << ',' << format_double(r.inv_gap) << ','
        << format_double(r.escape_time) << ',' << format_bool(r.escaped) << '\n';
  }
}

}  // namespace dpg
