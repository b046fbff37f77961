#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "dpg/counterexample.hpp"
#include "dpg/discrete.hpp"
#include "dpg/flow.hpp"
#include "dpg/io.hpp"
#include "dpg/mdp.hpp"
#include "dpg/verify.hpp"
#include "dpg/version.hpp"

namespace {

using dpg::format_bool;
using dpg::format_double;
using dpg::Vec;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerificationFailed = 2;
constexpr int kExitNumericalAbort = 3;

// Effective option resolution: an explicitly passed flag beats the config
// file, which beats the built-in default.
class OptionMerger {
 public:
  OptionMerger(const CLI::App& cmd, json config) : cmd_(cmd), config_(std::move(config)) {}

  template <typename T>
  void merge(const std::string& flag, const std::string& key, T& value) const {
    if (cmd_.count(flag) > 0) return;
    if (config_.contains(key)) value = config_.at(key).get<T>();
  }

 private:
  const CLI::App& cmd_;
  json config_;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  return j;
}

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir = out.empty() ? "." : out;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << text;
}

json report_envelope(const std::string& command, std::uint64_t seed, json config) {
  json j;
  j["version"] = DPG_VERSION;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = std::move(config);
  return j;
}

// ---------------------------------------------------------------------------

struct FlowArgs {
  std::string config_path, out = ".";
  std::string rewards = "1,0.9,0.1";
  std::string pi0 = "0.01,0.05,0.94";
  std::string theta0;  // overrides pi0 when nonempty
  std::string gate = "pg";
  double eta = 1.0;
  double dt = 1.0;
  double max_time = 2e4;
  long record_every = 0;  // 0: choose automatically (~2000 rows)
  int escape_opt = -1;    // -1: optimal arm
  int escape_corner = -1; // -1: argmax of the start policy
};

int run_flow(const CLI::App& cmd, FlowArgs& a) {
  const json config = load_config(a.config_path);
  const OptionMerger merge(cmd, config);
  merge.merge("--out", "out", a.out);
  merge.merge("--rewards", "rewards", a.rewards);
  merge.merge("--pi0", "pi0", a.pi0);
  merge.merge("--theta0", "theta0", a.theta0);
  merge.merge("--gate", "gate", a.gate);
  merge.merge("--eta", "eta", a.eta);
  merge.merge("--dt", "dt", a.dt);
  merge.merge("--max-time", "max_time", a.max_time);
  merge.merge("--record-every", "record_every", a.record_every);
  merge.merge("--escape-opt", "escape_opt", a.escape_opt);
  merge.merge("--escape-corner", "escape_corner", a.escape_corner);

  if (!(a.dt > 0.0)) throw std::invalid_argument("flow: dt must be positive");
  const dpg::BanditInstance bandit(dpg::parse_double_list(a.rewards));
  Vec theta0;
  if (!a.theta0.empty()) {
    theta0 = dpg::parse_double_list(a.theta0);
  } else {
    for (double p : dpg::parse_double_list(a.pi0)) {
      if (!(p > 0.0)) throw std::invalid_argument("flow: pi0 entries must be positive");
      theta0.push_back(std::log(p));
    }
  }
  dpg::FlowConfig cfg;
  cfg.gate = dpg::gate_from_name(a.gate, a.eta);
  cfg.dt = a.dt;
  cfg.max_time = a.max_time;
  cfg.stop_on_escape = false;
  const auto steps_estimate = static_cast<long>(a.max_time / a.dt + 1e-9);
  cfg.record_every = a.record_every > 0 ? a.record_every : std::max(1L, steps_estimate / 2000);
  cfg.escape_optimal = a.escape_opt >= 0 ? a.escape_opt : bandit.optimal_arm();
  if (a.escape_corner >= 0) {
    cfg.escape_corner = a.escape_corner;
  } else {
    const auto pi0 = dpg::softmax(dpg::Logits(theta0)).probs();
    cfg.escape_corner = static_cast<int>(std::max_element(pi0.begin(), pi0.end()) - pi0.begin());
  }
  if (cfg.escape_corner == cfg.escape_optimal)
    cfg.escape_corner = (cfg.escape_optimal + 1) % bandit.arms();

  const auto traj = dpg::integrate(bandit, dpg::Logits(theta0), cfg);

  const auto dir = prepare_out_dir(a.out);
  std::ostringstream csv;
  csv << 't';
  for (int i = 0; i < bandit.arms(); ++i) csv << ",theta_" << i;
  for (int i = 0; i < bandit.arms(); ++i) csv << ",pi_" << i;
  csv << ",value\n";
  for (std::size_t row = 0; row < traj.times.size(); ++row) {
    csv << format_double(traj.times[row]);
    for (double v : traj.thetas[row]) csv << ',' << format_double(v);
    for (double v : traj.pis[row]) csv << ',' << format_double(v);
    csv << ',' << format_double(traj.values[row]) << '\n';
  }
  write_text_file(dir / "flow.csv", csv.str());

  json effective;
  effective["rewards"] = bandit.rewards();
  effective["theta0"] = theta0;
  effective["gate"] = cfg.gate.name();
  effective["eta"] = a.eta;
  effective["dt"] = cfg.dt;
  effective["max_time"] = cfg.max_time;
  effective["record_every"] = cfg.record_every;
  effective["escape_opt"] = cfg.escape_optimal;
  effective["escape_corner"] = cfg.escape_corner;
  json rep = report_envelope("flow", 0, effective);
  rep["escaped"] = traj.escaped;
  rep["escape_time"] = traj.escaped ? json(traj.escape_time) : json();
  rep["steps"] = traj.steps;
  rep["final_value"] = traj.values.back();
  rep["final_pi"] = traj.pis.back();
  write_text_file(dir / "flow_report.json", rep.dump(2) + "\n");

  std::cout << "flow: " << (traj.escaped ? "escaped at t=" + format_double(traj.escape_time)
                                         : "no escape")
            << ", final value " << format_double(traj.values.back()) << "\n"
            << "wrote " << (dir / "flow.csv").string() << " and "
            << (dir / "flow_report.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string config_path, out = ".";
  std::string gaps = "0.5,0.2,0.1,0.05,0.03,0.02,0.015,0.012,0.01";
  std::string methods = "pg,dg";
  std::string theta0 = "-1,5,1";
  double eta = 1.0;
  double dt = 1.0;
  double max_time = 1e7;
};

int run_sweep(const CLI::App& cmd, SweepArgs& a) {
  const json config = load_config(a.config_path);
  const OptionMerger merge(cmd, config);
  merge.merge("--out", "out", a.out);
  merge.merge("--gaps", "gaps", a.gaps);
  merge.merge("--methods", "methods", a.methods);
  merge.merge("--theta0", "theta0", a.theta0);
  merge.merge("--eta", "eta", a.eta);
  merge.merge("--dt", "dt", a.dt);
  merge.merge("--max-time", "max_time", a.max_time);

  const auto gaps = dpg::parse_double_list(a.gaps);
  const auto theta0 = dpg::parse_double_list(a.theta0);
  std::vector<dpg::GateSpec> gates;
  for (const auto& name : dpg::split_string(a.methods, ','))
    gates.push_back(dpg::gate_from_name(name, a.eta));

  const auto result = dpg::gap_sweep(gaps, theta0, gates, a.dt, a.max_time);

  const auto dir = prepare_out_dir(a.out);
  std::ostringstream csv;
  dpg::write_sweep_csv(csv, result.rows);
  write_text_file(dir / "sweep.csv", csv.str());

  json effective;
  effective["gaps"] = gaps;
  effective["methods"] = a.methods;
  effective["theta0"] = theta0;
  effective["eta"] = a.eta;
  effective["dt"] = a.dt;
  effective["max_time"] = a.max_time;
  json rep = report_envelope("sweep", 0, effective);
  rep["errors"] = result.errors;
  json per_method = json::object();
  for (const auto& gate : gates) {
    std::vector<double> inv, time;
    for (const auto& row : result.rows) {
      if (row.method != gate.name() || !row.escaped) continue;
      inv.push_back(row.inv_gap);
      time.push_back(row.escape_time);
    }
    json m;
    m["escaped_rows"] = inv.size();
    if (inv.size() >= 2) {
      const auto fit = dpg::loglog_fit(inv, time);
      m["loglog_slope"] = fit.slope;
      m["loglog_r_squared"] = fit.r_squared;
    }
    if (inv.size() >= 4) {
      const std::vector<double> inv4(inv.end() - 4, inv.end());
      const std::vector<double> time4(time.end() - 4, time.end());
      m["loglog_slope_last4"] = dpg::loglog_fit(inv4, time4).slope;
    }
    per_method[gate.name()] = std::move(m);
  }
  rep["methods"] = per_method;
  write_text_file(dir / "sweep_summary.json", rep.dump(2) + "\n");

  std::cout << "sweep: " << result.rows.size() << " rows, " << result.errors.size()
            << " integration errors\n"
            << "wrote " << (dir / "sweep.csv").string() << " and "
            << (dir / "sweep_summary.json").string() << "\n";
  return result.errors.empty() ? kExitOk : kExitNumericalAbort;
}

// ---------------------------------------------------------------------------

struct MdpArgs {
  std::string config_path, out = ".";
  std::string mdp_path;
  std::string random_shape;  // "S,A" alternative to --mdp
  double gamma = 0.5;
  std::string gate = "eg";
  double eta = 1.0;
  double alpha = 1.0;
  double tv_tol = 1e-3;
  long max_iters = 200000;
  long min_iters = 0;
  std::uint64_t seed = 0;
};

int run_mdp(const CLI::App& cmd, MdpArgs& a) {
  const json config = load_config(a.config_path);
  const OptionMerger merge(cmd, config);
  merge.merge("--out", "out", a.out);
  merge.merge("--mdp", "mdp", a.mdp_path);
  merge.merge("--random", "random", a.random_shape);
  merge.merge("--gamma", "gamma", a.gamma);
  merge.merge("--gate", "gate", a.gate);
  merge.merge("--eta", "eta", a.eta);
  merge.merge("--alpha", "alpha", a.alpha);
  merge.merge("--tv-tol", "tv_tol", a.tv_tol);
  merge.merge("--max-iters", "max_iters", a.max_iters);
  merge.merge("--min-iters", "min_iters", a.min_iters);
  merge.merge("--seed", "seed", a.seed);

  std::optional<dpg::TabularMdp> mdp;
  if (!a.mdp_path.empty()) {
    std::ifstream in(a.mdp_path);
    if (!in) throw std::invalid_argument("mdp-run: cannot open '" + a.mdp_path + "'");
    mdp = dpg::TabularMdp::from_json(in);
  } else if (!a.random_shape.empty()) {
    const auto shape = dpg::parse_double_list(a.random_shape);
    if (shape.size() != 2)
      throw std::invalid_argument("mdp-run: --random expects 'n_states,n_actions'");
    dpg::Rng rng(a.seed);
    mdp = dpg::random_mdp(rng, static_cast<int>(shape[0]), static_cast<int>(shape[1]), a.gamma);
  } else {
    throw std::invalid_argument("mdp-run: need --mdp FILE or --random 'S,A'");
  }

  const auto gate = dpg::gate_from_name(a.gate, a.eta);
  const auto start = dpg::MdpPolicy::zeros(mdp->states(), mdp->actions());
  const auto run =
      dpg::run_mdp_to_convergence(*mdp, start, gate, a.alpha, a.tv_tol, a.max_iters, a.min_iters);
  const auto vi = dpg::value_iteration(*mdp);

  const auto dir = prepare_out_dir(a.out);
  std::ostringstream csv;
  csv << "t,delta\n";
  for (std::size_t t = 0; t < run.deltas.size(); ++t)
    csv << t << ',' << format_double(run.deltas[t]) << '\n';
  write_text_file(dir / "mdp_run.csv", csv.str());

  json effective;
  effective["mdp"] = a.mdp_path.empty() ? json(a.random_shape) : json(a.mdp_path);
  effective["gamma"] = mdp->gamma();
  effective["gate"] = gate.name();
  effective["eta"] = a.eta;
  effective["alpha"] = a.alpha;
  effective["tv_tol"] = a.tv_tol;
  effective["max_iters"] = a.max_iters;
  effective["min_iters"] = a.min_iters;
  json rep = report_envelope("mdp-run", a.seed, effective);
  rep["converged"] = run.converged;
  rep["iterations"] = run.iterations;
  rep["final_tv"] = run.final_tv;
  rep["min_visitation"] = run.min_visitation;
  rep["vi_min_margin"] = vi.min_margin;
  if (run.deltas.size() >= 40) {
    const auto fit = dpg::fit_rate(run.deltas);
    json f;
    f["slope"] = fit.slope;
    f["r_squared"] = fit.r_squared;
    f["tail_start"] = fit.t0;
    f["super_reciprocal"] = fit.super_reciprocal;
    rep["reciprocal_fit"] = f;
  }
  write_text_file(dir / "mdp_report.json", rep.dump(2) + "\n");

  std::cout << "mdp-run: " << (run.converged ? "converged" : "did not converge") << " after "
            << run.iterations << " iterations (final tv " << format_double(run.final_tv) << ")\n"
            << "wrote " << (dir / "mdp_run.csv").string() << " and "
            << (dir / "mdp_report.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string config_path, out = ".";
  std::string suite = "all";
  std::uint64_t seed = 0;
  double scale = 1.0;
};

int run_verify(const CLI::App& cmd, VerifyArgs& a) {
  const json config = load_config(a.config_path);
  const OptionMerger merge(cmd, config);
  merge.merge("--out", "out", a.out);
  merge.merge("--suite", "suite", a.suite);
  merge.merge("--seed", "seed", a.seed);
  merge.merge("--samples-scale", "samples_scale", a.scale);
  if (a.suite != "all" && a.suite != "bandit" && a.suite != "mdp" && a.suite != "counterexample")
    throw std::invalid_argument("verify: unknown suite '" + a.suite + "'");
  if (!(a.scale > 0.0)) throw std::invalid_argument("verify: samples-scale must be positive");

  const auto n = [&](long base) { return std::max(1L, static_cast<long>(base * a.scale)); };
  dpg::Rng rng(a.seed);
  long violations = 0;
  json rep;

  const bool do_bandit = a.suite == "all" || a.suite == "bandit";
  const bool do_mdp = a.suite == "all" || a.suite == "mdp";
  const bool do_counter = a.suite == "all" || a.suite == "counterexample";

  if (do_bandit) {
    json sec = json::array();
    const dpg::BanditInstance ref({1.0, 0.9, 0.1});
    int task = 0;
    for (int corner : {1, 2}) {
      for (const auto& gate : {dpg::GateSpec::eg(), dpg::GateSpec::dg(1.0)}) {
        dpg::Rng task_rng = rng.split(static_cast<std::uint64_t>(task++));
        const auto bracket =
            dpg::bracket_sector_bound(ref, corner, gate, n(2000), task_rng);
        long inside_violations = 0;
        if (bracket.bracket_found) {
          std::vector<double> inside;
          for (const auto& shell : bracket.shells)
            if (shell.eps <= bracket.eps0_lower) inside.push_back(shell.eps);
          dpg::Rng verify_rng = rng.split(static_cast<std::uint64_t>(1000 + task));
          const auto check =
              dpg::check_sector_bound(ref, corner, gate, inside, n(5000), verify_rng);
          for (const auto& shell : check.shells) inside_violations += shell.violations;
        }
        violations += inside_violations;
        if (!bracket.bracket_found) ++violations;
        json entry;
        entry["gate"] = bracket.gate;
        entry["eta"] = bracket.eta;
        entry["corner"] = corner;
        entry["bracket_found"] = bracket.bracket_found;
        entry["eps0_lower"] = bracket.eps0_lower;
        entry["eps0_upper"] = std::isinf(bracket.eps0_upper) ? json() : json(bracket.eps0_upper);
        entry["violations_inside"] = inside_violations;
        sec.push_back(entry);
      }
    }
    rep["sector_bounds"] = sec;

    dpg::Rng sup_rng = rng.split(77);
    const auto sup = dpg::check_poly_suppression(n(20000), sup_rng);
    violations += sup.violations + sup.product_violations;
    json supj;
    supj["samples"] = sup.samples;
    supj["violations"] = sup.violations;
    supj["worst_margin"] = sup.worst_margin;
    supj["product_samples"] = sup.product_samples;
    supj["product_violations"] = sup.product_violations;
    rep["suppression"] = supj;

    json maps = json::array();
    for (const auto& gate : {dpg::GateSpec::pg(), dpg::GateSpec::eg(), dpg::GateSpec::dg(1.0)}) {
      const auto map = dpg::map_bad_region(ref, gate, 1, 200, {0.1, 0.01, 0.001});
      json mj;
      mj["gate"] = gate.name();
      mj["overall_fraction"] = map.overall_fraction;
      json shells = json::array();
      for (const auto& shell : map.shells) {
        json sj;
        sj["eps"] = shell.eps;
        sj["cells"] = shell.cells;
        sj["fraction"] = shell.fraction;
        shells.push_back(sj);
      }
      mj["shells"] = shells;
      maps.push_back(mj);
    }
    rep["region_maps"] = maps;

    long mono_violations = 0;
    double worst_match = 0.0;
    dpg::Rng mono_rng = rng.split(101);
    const long mono_cases = n(200);
    for (long i = 0; i < mono_cases; ++i) {
      dpg::Rng case_rng = mono_rng.split(static_cast<std::uint64_t>(i));
      const int k = case_rng.uniform_int(2, 8);
      Vec rewards(static_cast<std::size_t>(k));
      for (auto& v : rewards) v = case_rng.uniform();
      const dpg::BanditInstance b(rewards);
      const auto pi = dpg::PolicySimplex::from_probabilities(case_rng.dirichlet_uniform(k));
      const double eta = std::exp(case_rng.uniform(std::log(0.1), std::log(5.0)));
      const auto rep_eg = dpg::eg_step(b, pi, eta);
      const auto rep_dg = dpg::dg_step(b, pi, eta, 1.0);
      for (const auto& r : {rep_eg, rep_dg}) {
        if (r.value_delta < -1e-12) ++mono_violations;
        worst_match = std::max(worst_match, std::abs(r.value_delta - r.progress));
      }
    }
    violations += mono_violations;
    if (worst_match > 1e-9) ++violations;
    json mono;
    mono["cases"] = mono_cases;
    mono["violations"] = mono_violations;
    mono["worst_progress_mismatch"] = worst_match;
    rep["bandit_monotonicity"] = mono;
  }

  if (do_mdp) {
    dpg::Rng mdp_rng = rng.split(202);
    long mono_violations = 0;
    double worst_match = 0.0;
    double worst_pdl = 0.0;
    const long cases = n(20);
    for (long i = 0; i < cases; ++i) {
      dpg::Rng case_rng = mdp_rng.split(static_cast<std::uint64_t>(i));
      const int s = case_rng.uniform_int(2, 6);
      const int act = case_rng.uniform_int(2, 4);
      const auto m = dpg::random_mdp(case_rng, s, act, case_rng.uniform(0.3, 0.8));
      auto pol = dpg::MdpPolicy::zeros(s, act);
      for (auto& row : pol.theta)
        for (auto& v : row) v = case_rng.uniform(-2.0, 2.0);
      const auto rep_eg = dpg::eg_mdp_step(m, pol, 1.0);
      const auto rep_dg = dpg::dg_mdp_step(m, pol, 1.0, 1.0);
      for (const auto& r : {rep_eg, rep_dg}) {
        if (r.value_delta < -1e-12) ++mono_violations;
        worst_match = std::max(worst_match, std::abs(r.value_delta - r.progress));
      }
      auto other = dpg::MdpPolicy::zeros(s, act);
      for (auto& row : other.theta)
        for (auto& v : row) v = case_rng.uniform(-2.0, 2.0);
      worst_pdl = std::max(worst_pdl, dpg::pdl_residual(m, pol, other));
    }
    violations += mono_violations;
    if (worst_match > 1e-9) ++violations;
    if (worst_pdl > 1e-9) ++violations;
    json mj;
    mj["cases"] = cases;
    mj["violations"] = mono_violations;
    mj["worst_progress_mismatch"] = worst_match;
    mj["worst_pdl_residual"] = worst_pdl;

    long converged = 0;
    const long conv_cases = 3;
    for (long i = 0; i < conv_cases; ++i) {
      dpg::Rng case_rng = mdp_rng.split(static_cast<std::uint64_t>(900 + i));
      auto m = dpg::random_mdp(case_rng, 4, 3, 0.5);
      dpg::ViResult vi = dpg::value_iteration(m);
      for (int tries = 0; tries < 50 && vi.min_margin < 1e-3; ++tries) {
        m = dpg::random_mdp(case_rng, 4, 3, 0.5);
        vi = dpg::value_iteration(m);
      }
      const auto run = dpg::run_mdp_to_convergence(m, dpg::MdpPolicy::zeros(4, 3),
                                                   dpg::GateSpec::eg(), 1.0, 1e-3, 100000);
      if (run.converged) ++converged;
    }
    if (converged != conv_cases) ++violations;
    mj["convergence_cases"] = conv_cases;
    mj["converged"] = converged;
    rep["mdp"] = mj;
  }

  if (do_counter) {
    const dpg::SharedParamInstance inst;
    const auto rep_eg =
        dpg::find_fixed_points([&](double p) { return dpg::f_eg(inst, p); });
    const auto rep_dg =
        dpg::find_fixed_points([&](double p) { return dpg::f_dg(inst, p, 1.0); });
    const auto rep_pg =
        dpg::find_fixed_points([&](double p) { return dpg::f_pg(inst, p); });
    json cj;
    cj["eg_roots"] = json::array();
    for (const auto& r : rep_eg.roots) {
      json rj;
      rj["p"] = r.p;
      rj["f_prime"] = r.f_prime;
      rj["stable"] = r.stable;
      cj["eg_roots"].push_back(rj);
    }
    cj["dg_roots_eta1"] = json::array();
    for (const auto& r : rep_dg.roots) {
      json rj;
      rj["p"] = r.p;
      rj["f_prime"] = r.f_prime;
      rj["stable"] = r.stable;
      cj["dg_roots_eta1"].push_back(rj);
    }
    cj["pg_negative_on_grid"] = rep_pg.negative_on_grid;
    cj["pg_roots"] = rep_pg.roots.size();
    bool ok = rep_pg.negative_on_grid && rep_pg.roots.empty();
    bool found_eg = false;
    for (const auto& r : rep_eg.roots)
      if (std::abs(r.p - 1.0 / 11.0) < 1e-8 && r.stable) found_eg = true;
    ok = ok && found_eg && !rep_dg.roots.empty();
    if (!ok) ++violations;
    cj["consistent"] = ok;
    rep["counterexample"] = cj;
  }

  json effective;
  effective["suite"] = a.suite;
  effective["samples_scale"] = a.scale;
  json out = report_envelope("verify", a.seed, effective);
  out.update(rep);
  out["violations"] = violations;
  out["passed"] = violations == 0;

  const auto dir = prepare_out_dir(a.out);
  write_text_file(dir / "verify_report.json", out.dump(2) + "\n");
  std::cout << "verify: " << (violations == 0 ? "passed" : "FAILED") << " (" << violations
            << " violations)\n"
            << "wrote " << (dir / "verify_report.json").string() << "\n";
  return violations == 0 ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------

struct CounterArgs {
  std::string config_path, out = ".";
  std::string etas = "0.1,0.5,1,2,5";
  long grid_n = 2001;
  double lo = 0.001, hi = 0.999;
};

int run_counterexample(const CLI::App& cmd, CounterArgs& a) {
  const json config = load_config(a.config_path);
  const OptionMerger merge(cmd, config);
  merge.merge("--out", "out", a.out);
  merge.merge("--etas", "etas", a.etas);
  merge.merge("--grid-n", "grid_n", a.grid_n);
  merge.merge("--lo", "lo", a.lo);
  merge.merge("--hi", "hi", a.hi);
  if (a.grid_n < 2) throw std::invalid_argument("counterexample: grid-n must be >= 2");
  if (!(a.lo > 0.0) || !(a.hi < 1.0) || !(a.lo < a.hi))
    throw std::invalid_argument("counterexample: need 0 < lo < hi < 1");

  const auto etas = dpg::parse_double_list(a.etas);
  const dpg::SharedParamInstance inst;

  const auto dir = prepare_out_dir(a.out);
  std::ostringstream csv;
  csv << "p,f_pg,f_eg";
  for (double eta : etas) csv << ",f_dg_eta_" << format_double(eta);
  csv << '\n';
  for (long i = 0; i < a.grid_n; ++i) {
    const double p = a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.grid_n - 1);
    csv << format_double(p) << ',' << format_double(dpg::f_pg(inst, p)) << ','
        << format_double(dpg::f_eg(inst, p));
    for (double eta : etas) csv << ',' << format_double(dpg::f_dg(inst, p, eta));
    csv << '\n';
  }
  write_text_file(dir / "counterexample.csv", csv.str());

  json effective;
  effective["etas"] = etas;
  effective["grid_n"] = a.grid_n;
  effective["lo"] = a.lo;
  effective["hi"] = a.hi;
  json rep = report_envelope("counterexample", 0, effective);
  const auto root_json = [](const dpg::FixedPointReport& r) {
    json arr = json::array();
    for (const auto& fp : r.roots) {
      json j;
      j["p"] = fp.p;
      j["f_value"] = fp.f_value;
      j["f_prime"] = fp.f_prime;
      j["stable"] = fp.stable;
      arr.push_back(j);
    }
    return arr;
  };
  const auto pg_rep = dpg::find_fixed_points([&](double p) { return dpg::f_pg(inst, p); },
                                             a.grid_n, a.lo, a.hi);
  rep["pg"] = {{"roots", root_json(pg_rep)},
               {"negative_on_grid", pg_rep.negative_on_grid},
               {"grid_min", pg_rep.grid_min},
               {"grid_max", pg_rep.grid_max}};
  const auto eg_rep = dpg::find_fixed_points([&](double p) { return dpg::f_eg(inst, p); },
                                             a.grid_n, a.lo, a.hi);
  rep["eg"] = {{"roots", root_json(eg_rep)}};
  json dg = json::object();
  for (double eta : etas) {
    const auto dg_rep = dpg::find_fixed_points(
        [&](double p) { return dpg::f_dg(inst, p, eta); }, a.grid_n, a.lo, a.hi);
    dg[format_double(eta)] = {{"roots", root_json(dg_rep)}};
  }
  rep["dg"] = dg;
  write_text_file(dir / "counterexample_report.json", rep.dump(2) + "\n");

  std::cout << "counterexample: " << eg_rep.roots.size() << " hard-gate root(s), pg "
            << (pg_rep.negative_on_grid ? "negative on grid" : "NOT negative on grid") << "\n"
            << "wrote " << (dir / "counterexample.csv").string() << " and "
            << (dir / "counterexample_report.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated policy-gradient flows on bandits and tabular MDPs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DPG_VERSION);

  FlowArgs flow_args;
  auto* flow_cmd = app.add_subcommand("flow", "Integrate one gated flow trajectory");
  flow_cmd->add_option("--config", flow_args.config_path, "JSON config file");
  flow_cmd->add_option("--out", flow_args.out, "Output directory");
  flow_cmd->add_option("--rewards", flow_args.rewards, "Comma-separated rewards");
  flow_cmd->add_option("--pi0", flow_args.pi0, "Start policy (comma-separated)");
  flow_cmd->add_option("--theta0", flow_args.theta0, "Start logits; overrides --pi0");
  flow_cmd->add_option("--gate", flow_args.gate, "Gate: pg, eg or dg");
  flow_cmd->add_option("--eta", flow_args.eta, "Smooth-gate temperature");
  flow_cmd->add_option("--dt", flow_args.dt, "Euler step size");
  flow_cmd->add_option("--max-time", flow_args.max_time, "Integration horizon");
  flow_cmd->add_option("--record-every", flow_args.record_every, "Snapshot cadence (0 = auto)");
  flow_cmd->add_option("--escape-opt", flow_args.escape_opt, "Escaping arm (-1 = optimal)");
  flow_cmd->add_option("--escape-corner", flow_args.escape_corner,
                       "Corner arm (-1 = start argmax)");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Escape-time sweep over reward gaps");
  sweep_cmd->add_option("--config", sweep_args.config_path, "JSON config file");
  sweep_cmd->add_option("--out", sweep_args.out, "Output directory");
  sweep_cmd->add_option("--gaps", sweep_args.gaps, "Comma-separated reward gaps");
  sweep_cmd->add_option("--methods", sweep_args.methods, "Comma-separated gates");
  sweep_cmd->add_option("--theta0", sweep_args.theta0, "Start logits");
  sweep_cmd->add_option("--eta", sweep_args.eta, "Smooth-gate temperature");
  sweep_cmd->add_option("--dt", sweep_args.dt, "Euler step size");
  sweep_cmd->add_option("--max-time", sweep_args.max_time, "Censoring horizon");

  MdpArgs mdp_args;
  auto* mdp_cmd = app.add_subcommand("mdp-run", "Iterate a gated update on a tabular instance");
  mdp_cmd->add_option("--config", mdp_args.config_path, "JSON config file");
  mdp_cmd->add_option("--out", mdp_args.out, "Output directory");
  mdp_cmd->add_option("--mdp", mdp_args.mdp_path, "Instance JSON file");
  mdp_cmd->add_option("--random", mdp_args.random_shape, "Random instance 'n_states,n_actions'");
  mdp_cmd->add_option("--gamma", mdp_args.gamma, "Discount for --random");
  mdp_cmd->add_option("--gate", mdp_args.gate, "Gate: eg or dg");
  mdp_cmd->add_option("--eta", mdp_args.eta, "Gate temperature");
  mdp_cmd->add_option("--alpha", mdp_args.alpha, "Step size of the smooth-gate update");
  mdp_cmd->add_option("--tv-tol", mdp_args.tv_tol, "Per-state total-variation stop");
  mdp_cmd->add_option("--max-iters", mdp_args.max_iters, "Iteration cap");
  mdp_cmd->add_option("--min-iters", mdp_args.min_iters, "Keep iterating at least this long");
  mdp_cmd->add_option("--seed", mdp_args.seed, "Seed for --random");

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "Run the falsification battery");
  verify_cmd->add_option("--config", verify_args.config_path, "JSON config file");
  verify_cmd->add_option("--out", verify_args.out, "Output directory");
  verify_cmd->add_option("--suite", verify_args.suite, "all, bandit, mdp or counterexample");
  verify_cmd->add_option("--seed", verify_args.seed, "Sampling seed");
  verify_cmd->add_option("--samples-scale", verify_args.scale, "Scale factor on sample counts");

  CounterArgs counter_args;
  auto* counter_cmd =
      app.add_subcommand("counterexample", "Shared-parameter gradient fields and fixed points");
  counter_cmd->add_option("--config", counter_args.config_path, "JSON config file");
  counter_cmd->add_option("--out", counter_args.out, "Output directory");
  counter_cmd->add_option("--etas", counter_args.etas, "Smooth-gate temperatures");
  counter_cmd->add_option("--grid-n", counter_args.grid_n, "Grid points over (lo, hi)");
  counter_cmd->add_option("--lo", counter_args.lo, "Grid lower end");
  counter_cmd->add_option("--hi", counter_args.hi, "Grid upper end");

  try {
    app.parse(argc, argv);
    if (flow_cmd->parsed()) return run_flow(*flow_cmd, flow_args);
    if (sweep_cmd->parsed()) return run_sweep(*sweep_cmd, sweep_args);
    if (mdp_cmd->parsed()) return run_mdp(*mdp_cmd, mdp_args);
    if (verify_cmd->parsed()) return run_verify(*verify_cmd, verify_args);
    if (counter_cmd->parsed()) return run_counterexample(*counter_cmd, counter_args);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumericalAbort;
  }
}
