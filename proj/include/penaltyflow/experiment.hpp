#ifndef PENALTYFLOW_EXPERIMENT_HPP
#define PENALTYFLOW_EXPERIMENT_HPP

// Config-driven experiments behind the command-line tool: run, check-h,
// compare and sweep. Run config schema (unknown keys rejected):
//
//   {"problem": "<registry name>" | <problem JSON>,
//    "gamma": g?, "schedule": <schedule>?, "u0": [..]?, "v0": [..]?,
//    "integrator": {"method","rel_tol","abs_tol","max_step","initial_step",
//                   "t_end","output_step"}?,
//    "diagnostics": {"energy","lyapunov","convergence","condition_h",
//                    "condition_h_t_max","dissipation_tol","tolerance_factor",
//                    "terminal_eps","distance_eps","cauchy_ratio",
//                    "compare_tol","growth_t0","override_growth"}?,
//    "sweep": {"gamma":[..],"alpha":[..]}?,
//    "output": "dir"?, "plot": bool?}
//
// Check-h config: {"psi":<penalty>, "schedule":<schedule>, "p":[[..],..],
//                  "t_max":T?, "mode":"closed_form"|"quadrature"?, "output":"dir"?}

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "penaltyflow/problems.hpp"
#include "penaltyflow/svg.hpp"

namespace penaltyflow {

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_verdict = 2, exit_inconclusive = 3 };

struct DiagnosticToggles {
  bool energy = true;
  bool lyapunov = true;
  bool convergence = true;
  std::vector<Vector> condition_h;
  double condition_h_t_max = 1e4;
  double dissipation_tol = 1e-3;
  double tolerance_factor = 10.0;
  double terminal_eps = 1e-2;
  double distance_eps = 5e-2;
  double cauchy_ratio = 0.05;
  double compare_tol = 1e-2;
  double growth_t0 = 0.0;
  bool override_growth = false;

  Json to_json() const {
    Json ps = Json::array();
    for (const Vector& p : condition_h) ps.push_back(detail::to_json_vector(p));
    return {{"energy", energy},
            {"lyapunov", lyapunov},
            {"convergence", convergence},
            {"condition_h", ps},
            {"condition_h_t_max", condition_h_t_max},
            {"dissipation_tol", dissipation_tol},
            {"tolerance_factor", tolerance_factor},
            {"terminal_eps", terminal_eps},
            {"distance_eps", distance_eps},
            {"cauchy_ratio", cauchy_ratio},
            {"compare_tol", compare_tol},
            {"growth_t0", growth_t0},
            {"override_growth", override_growth}};
  }
};

struct SweepGrid {
  std::vector<double> gamma;
  std::vector<double> alpha;
};

struct RunConfig {
  std::string problem_ref;
  BenchmarkProblem problem = flagship_problem();
  IntegratorConfig integrator;
  double output_step = 0.01;
  DiagnosticToggles diagnostics;
  std::optional<SweepGrid> sweep;
  std::string output_dir = "out";
  bool plot = false;

  /// Applies t_end and output_step to the sample count.
  void set_horizon(double t_end) {
    if (!(t_end > 0.0)) throw ConfigError("integrator.t_end: must be positive");
    integrator.t_end = t_end;
    const double n = std::round(t_end / output_step);
    if (!(n >= 1.0) || n > 1e8) throw ConfigError("integrator.output_step: gives an unusable sample count");
    integrator.sample_count = static_cast<int>(n) + 1;
  }

  /// rel_tol = tol, abs_tol = tol / 100.
  void set_tolerance(double tol) {
    if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tol: must lie in (0, 1)");
    integrator.rel_tol = tol;
    integrator.abs_tol = tol * 1e-2;
  }

  Json integrator_json() const {
    return {{"method", to_string(integrator.method)},
            {"rel_tol", integrator.rel_tol},
            {"abs_tol", integrator.abs_tol},
            {"max_step", integrator.max_step},
            {"initial_step", integrator.initial_step},
            {"t_end", integrator.t_end},
            {"output_step", output_step},
            {"sample_count", integrator.sample_count}};
  }
};

namespace detail {

inline double positive(const Json& j, const std::string& where) {
  const double v = json_number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
  return v;
}

inline bool json_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + ": expected true or false");
  return j.get<bool>();
}

inline std::vector<double> json_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(json_number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<Vector> json_vector_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of vectors");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(json_vector(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline void parse_integrator(const Json& j, RunConfig& c) {
  const std::string w = "integrator";
  require_keys(j, w, {}, {"method", "rel_tol", "abs_tol", "max_step", "initial_step", "t_end", "output_step"});
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw ConfigError(w + ".method: expected a string");
    const std::string m = j["method"].get<std::string>();
    if (m == "dopri45") c.integrator.method = Method::dopri45;
    else if (m == "rk4") c.integrator.method = Method::rk4;
    else throw ConfigError(w + ".method: unknown method '" + m + "' (use dopri45 or rk4)");
  }
  if (j.contains("rel_tol")) c.integrator.rel_tol = positive(j["rel_tol"], w + ".rel_tol");
  if (j.contains("abs_tol")) c.integrator.abs_tol = positive(j["abs_tol"], w + ".abs_tol");
  if (j.contains("max_step")) c.integrator.max_step = positive(j["max_step"], w + ".max_step");
  if (j.contains("initial_step")) c.integrator.initial_step = positive(j["initial_step"], w + ".initial_step");
  if (j.contains("output_step")) c.output_step = positive(j["output_step"], w + ".output_step");
  if (!(c.integrator.rel_tol < 1.0)) throw ConfigError(w + ".rel_tol: must be < 1");
  if (!(c.integrator.abs_tol < 1.0)) throw ConfigError(w + ".abs_tol: must be < 1");
  c.set_horizon(j.contains("t_end") ? positive(j["t_end"], w + ".t_end") : c.integrator.t_end);
}

inline void parse_diagnostics(const Json& j, DiagnosticToggles& d) {
  const std::string w = "diagnostics";
  require_keys(j, w, {},
               {"energy", "lyapunov", "convergence", "condition_h", "condition_h_t_max", "dissipation_tol",
                "tolerance_factor", "terminal_eps", "distance_eps", "cauchy_ratio", "compare_tol", "growth_t0",
                "override_growth"});
  if (j.contains("energy")) d.energy = json_bool(j["energy"], w + ".energy");
  if (j.contains("lyapunov")) d.lyapunov = json_bool(j["lyapunov"], w + ".lyapunov");
  if (j.contains("convergence")) d.convergence = json_bool(j["convergence"], w + ".convergence");
  if (j.contains("condition_h")) d.condition_h = json_vector_list(j["condition_h"], w + ".condition_h");
  if (j.contains("condition_h_t_max")) d.condition_h_t_max = positive(j["condition_h_t_max"], w + ".condition_h_t_max");
  if (j.contains("dissipation_tol")) d.dissipation_tol = positive(j["dissipation_tol"], w + ".dissipation_tol");
  if (j.contains("tolerance_factor")) d.tolerance_factor = positive(j["tolerance_factor"], w + ".tolerance_factor");
  if (j.contains("terminal_eps")) d.terminal_eps = positive(j["terminal_eps"], w + ".terminal_eps");
  if (j.contains("distance_eps")) d.distance_eps = positive(j["distance_eps"], w + ".distance_eps");
  if (j.contains("cauchy_ratio")) d.cauchy_ratio = positive(j["cauchy_ratio"], w + ".cauchy_ratio");
  if (j.contains("compare_tol")) d.compare_tol = positive(j["compare_tol"], w + ".compare_tol");
  if (j.contains("growth_t0")) {
    d.growth_t0 = json_number(j["growth_t0"], w + ".growth_t0");
    if (!(d.growth_t0 >= 0.0)) throw ConfigError(w + ".growth_t0: must be >= 0");
  }
  if (j.contains("override_growth")) d.override_growth = json_bool(j["override_growth"], w + ".override_growth");
}

inline SweepGrid parse_sweep(const Json& j) {
  require_keys(j, "sweep", {"gamma", "alpha"});
  SweepGrid g{json_list(j["gamma"], "sweep.gamma"), json_list(j["alpha"], "sweep.alpha")};
  for (double v : g.gamma) {
    if (!(v > 0.0)) throw ConfigError("sweep.gamma: entries must be positive");
  }
  for (double v : g.alpha) {
    if (!(v >= 0.0)) throw ConfigError("sweep.alpha: entries must be >= 0");
  }
  return g;
}

}  // namespace detail

inline RunConfig run_config_from_json(const Json& j) {
  using namespace detail;
  require_keys(j, "config", {"problem"},
               {"gamma", "schedule", "u0", "v0", "integrator", "diagnostics", "sweep", "output", "plot"});
  RunConfig c;
  if (j["problem"].is_string()) {
    c.problem_ref = j["problem"].get<std::string>();
    c.problem = problem_by_name(c.problem_ref);
  } else if (j["problem"].is_object()) {
    c.problem_ref = "inline";
    c.problem = problem_from_json(j["problem"], "problem");
  } else {
    throw ConfigError("problem: expected a registry name or a problem object");
  }

  ProblemInstance inst = c.problem.instance;
  if (j.contains("gamma")) inst = build("gamma", [&] { return inst.with_gamma(positive(j["gamma"], "gamma")); });
  if (j.contains("schedule")) inst = inst.with_schedule(schedule_from_json(j["schedule"], "schedule"));
  if (j.contains("u0") || j.contains("v0")) {
    Vector u0 = j.contains("u0") ? json_vector(j["u0"], "u0") : inst.u0();
    Vector v0 = j.contains("v0") ? json_vector(j["v0"], "v0") : inst.v0();
    inst = build("u0", [&] { return inst.with_initial(u0, v0); });
  }
  c.problem.instance = inst;
  c.problem.tags = regime_of(inst);

  c.set_horizon(c.integrator.t_end);
  if (j.contains("integrator")) parse_integrator(j["integrator"], c);
  if (j.contains("diagnostics")) parse_diagnostics(j["diagnostics"], c.diagnostics);
  for (const Vector& p : c.diagnostics.condition_h) {
    build("diagnostics.condition_h", [&] {
      require_dimension(inst.dimension(), p, "p");
      return 0;
    });
  }
  if (j.contains("sweep")) c.sweep = parse_sweep(j["sweep"]);
  if (j.contains("output")) {
    if (!j["output"].is_string() || j["output"].get<std::string>().empty()) {
      throw ConfigError("output: expected a nonempty directory name");
    }
    c.output_dir = j["output"].get<std::string>();
  }
  if (j.contains("plot")) c.plot = json_bool(j["plot"], "plot");
  return c;
}

inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::filesystem::path prepare_output(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw std::runtime_error("cannot create output directory '" + dir + "'");
  return p;
}

inline double distance_to_solutions(const BenchmarkProblem& bp, const Vector& x) {
  return bp.z_star.size() == 0 ? std::numeric_limits<double>::quiet_NaN() : bp.distance_to_solutions(x);
}

inline Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json warnings_for(const ProblemInstance& p) {
  Json w = Json::array();
  if (!p.schedule().divergent() && p.psi().base().kind() != "zero") {
    w.push_back("schedule does not tend to infinity: penalty convergence results do not apply");
  }
  return w;
}

inline void write_svg(const std::filesystem::path& path, const Trajectory& traj, const ProblemInstance& p) {
  const std::vector<double> t = sample_times(traj);
  svg::Panel coords{"x(t)", {}};
  const Eigen::Index shown = std::min<Eigen::Index>(p.dimension(), 6);
  for (Eigen::Index i = 0; i < shown; ++i) {
    svg::Series s{"x_" + std::to_string(i), {}};
    for (const Sample& smp : traj.samples) s.y.push_back(smp.x[i]);
    coords.series.push_back(std::move(s));
  }
  svg::Panel diag{"diagnostics", {{"E", {}}, {"beta psi", {}}, {"|x'|", {}}}};
  for (const Sample& smp : traj.samples) {
    diag.series[0].y.push_back(energy_of(smp));
    diag.series[1].y.push_back(smp.beta * smp.psi);
    diag.series[2].y.push_back(smp.v.norm());
  }
  std::ostringstream os;
  svg::write_chart(os, t, {coords, diag});
  write_text(path, os.str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunResult {
  int exit_code = exit_ok;
  Json report;
  std::optional<Trajectory> trajectory;
};

/// Integrates the configured problem and evaluates every enabled verdict.
inline RunResult execute_run(const RunConfig& c) {
  const BenchmarkProblem& bp = c.problem;
  const ProblemInstance& p = bp.instance;
  const DiagnosticToggles& d = c.diagnostics;
  RunResult out;
  Json& rep = out.report;
  rep["command"] = "run";
  rep["problem"] = {{"ref", c.problem_ref}, {"definition", problem_to_json(p)}, {"tags", bp.tags.to_json()}};
  rep["problem"]["definition"]["z_star"] =
      bp.z_star.size() ? detail::to_json_vector(bp.z_star) : Json(nullptr);
  rep["integrator"] = c.integrator_json();
  rep["diagnostics"] = d.to_json();
  rep["warnings"] = detail::warnings_for(p);
  Json verdicts = Json::object();

  const GrowthReport growth = verify_growth(p.schedule(), p.gamma(), d.growth_t0);
  rep["growth"] = growth.to_json();
  verdicts["growth"] = growth.feasible;
  if (!growth.feasible && !d.override_growth) {
    rep["verdicts"] = verdicts;
    rep["passed"] = false;
    rep["reason"] = growth.reason;
    out.exit_code = exit_verdict;
    return out;
  }

  IntegrateOptions io;
  io.override_growth = d.override_growth;
  io.growth_t0 = d.growth_t0;
  Trajectory traj = integrate(p, c.integrator, SystemKind::second_order, io);
  rep["integration"] = traj.meta.to_json();
  verdicts["integration"] = traj.completed();

  const bool have_z = bp.z_star.size() > 0;
  const bool usable = traj.completed() && traj.size() >= 5;
  if (usable && d.energy) {
    const auto r = dissipation_residual(traj, p);
    Json j = r.to_json();
    j["tolerance"] = d.dissipation_tol * r.energy_scale;
    rep["dissipation"] = j;
    verdicts["dissipation"] = r.max_residual <= d.dissipation_tol * r.energy_scale;
  }
  if (usable && d.convergence && have_z) {
    ConvergenceOptions co;
    co.terminal_eps = d.terminal_eps;
    co.distance_eps = d.distance_eps;
    co.cauchy_ratio = d.cauchy_ratio;
    const auto r = convergence_report(traj, p, bp.z_star, co);
    Json j = r.to_json();
    const double dist_s = detail::distance_to_solutions(bp, traj.back().x);
    j["distance_to_solution_set"] = dist_s;
    rep["convergence"] = j;
    verdicts["convergence"] = dist_s <= d.distance_eps && std::abs(r.phi_gap_terminal) <= d.terminal_eps &&
                              r.beta_psi_terminal <= d.terminal_eps && r.velocity_terminal <= d.terminal_eps &&
                              r.integral_beta_psi_tail_ratio <= d.cauchy_ratio &&
                              r.integral_velocity_sq_tail_ratio <= d.cauchy_ratio;
  }
  if (usable && d.lyapunov && have_z) {
    if (d.growth_t0 > 0.0 || !growth.feasible) {
      rep["warnings"].push_back("lyapunov checks skipped: growth bound does not hold from t = 0");
    } else {
      const auto r = lyapunov_inequality_check(traj, p, bp.z_star, growth.k_min, Certification::required,
                                               d.tolerance_factor);
      rep["lyapunov"] = r.to_json();
      verdicts["lyapunov"] = r.passed();
    }
  }
  if (!d.condition_h.empty()) {
    Json arr = Json::array();
    bool all_finite = true;
    for (const Vector& pv : d.condition_h) {
      const auto r = condition_h_check(p.psi(), p.schedule(), pv, d.condition_h_t_max);
      arr.push_back(r.to_json());
      all_finite = all_finite && r.verdict == HVerdict::finite;
    }
    rep["condition_h"] = arr;
    verdicts["condition_h"] = all_finite;
  }

  bool passed = true;
  for (const auto& [_, v] : verdicts.items()) passed = passed && v.get<bool>();
  rep["verdicts"] = verdicts;
  rep["passed"] = passed;
  out.exit_code = passed ? exit_ok : exit_verdict;
  out.trajectory = std::move(traj);
  return out;
}

/// Writes trajectory.csv, energy.csv, report.json and optionally
/// trajectory.svg into the output directory.
inline int cmd_run(const RunConfig& c, std::ostream& log) {
  for (const auto& w : detail::warnings_for(c.problem.instance)) log << "warning: " << w.get<std::string>() << '\n';
  RunResult r = execute_run(c);
  const auto dir = detail::prepare_output(c.output_dir);
  if (r.trajectory) {
    std::ostringstream tcsv, ecsv;
    write_trajectory_csv(tcsv, *r.trajectory);
    detail::write_text(dir / "trajectory.csv", tcsv.str());
    write_energy_csv(ecsv, energy_series(*r.trajectory, c.problem.instance));
    detail::write_text(dir / "energy.csv", ecsv.str());
    if (c.plot) detail::write_svg(dir / "trajectory.svg", *r.trajectory, c.problem.instance);
  }
  detail::write_text(dir / "report.json", r.report.dump(2) + "\n");
  if (r.report.contains("reason")) log << r.report["reason"].get<std::string>() << '\n';
  log << "run: " << (r.exit_code == exit_ok ? "passed" : "verdict failure") << " (" << (dir / "report.json").string()
      << ")\n";
  return r.exit_code;
}

// ---------------------------------------------------------------------------
// check-h
// ---------------------------------------------------------------------------

struct CheckHConfig {
  PenaltyFunction psi = zero_penalty(1);
  PenaltySchedule schedule = PenaltySchedule::constant(1.0);
  std::vector<Vector> ps;
  double t_max = 1e4;
  HMode mode = HMode::closed_form;
  std::optional<std::string> output_dir;
};

inline HMode parse_h_mode(const std::string& s, const std::string& where) {
  if (s == "closed_form") return HMode::closed_form;
  if (s == "quadrature") return HMode::quadrature;
  throw ConfigError(where + ": unknown mode '" + s + "' (use closed_form or quadrature)");
}

inline CheckHConfig check_h_config_from_json(const Json& j) {
  using namespace detail;
  require_keys(j, "config", {"psi", "schedule", "p"}, {"t_max", "mode", "output"});
  CheckHConfig c;
  c.psi = penalty_from_json(j["psi"], "psi");
  c.schedule = schedule_from_json(j["schedule"], "schedule");
  c.ps = json_vector_list(j["p"], "p");
  if (c.ps.empty()) throw ConfigError("p: expected at least one vector");
  for (const Vector& p : c.ps) {
    build("p", [&] {
      require_dimension(c.psi.dimension(), p, "p");
      return 0;
    });
  }
  if (j.contains("t_max")) c.t_max = positive(j["t_max"], "t_max");
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw ConfigError("mode: expected a string");
    c.mode = parse_h_mode(j["mode"].get<std::string>(), "mode");
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output: expected a string");
    c.output_dir = j["output"].get<std::string>();
  }
  return c;
}

struct CheckHResult {
  int exit_code = exit_ok;
  std::vector<ConditionHReport> reports;
};

/// exit 0 iff all finite; 2 if any divergent; otherwise 3 if any inconclusive.
inline CheckHResult execute_check_h(const CheckHConfig& c) {
  ConditionHOptions opt;
  opt.allow_closed_form = c.mode == HMode::closed_form;
  CheckHResult out;
  bool divergent = false, inconclusive = false;
  for (const Vector& p : c.ps) {
    out.reports.push_back(condition_h_check(c.psi, c.schedule, p, c.t_max, opt));
    divergent = divergent || out.reports.back().verdict == HVerdict::divergent;
    inconclusive = inconclusive || out.reports.back().verdict == HVerdict::inconclusive;
  }
  out.exit_code = divergent ? exit_verdict : inconclusive ? exit_inconclusive : exit_ok;
  return out;
}

/// Prints one report per p as a JSON line; ConjugateUnavailable propagates.
inline int cmd_check_h(const CheckHConfig& c, std::ostream& out) {
  const CheckHResult r = execute_check_h(c);
  Json all = Json::array();
  for (const auto& rep : r.reports) {
    out << rep.to_json().dump() << '\n';
    all.push_back(rep.to_json());
  }
  if (c.output_dir) {
    const auto dir = detail::prepare_output(*c.output_dir);
    detail::write_text(dir / "check_h.json", Json{{"command", "check-h"}, {"reports", all}, {"exit_code", r.exit_code}}
                                                     .dump(2) +
                                                 "\n");
  }
  return r.exit_code;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareResult {
  int exit_code = exit_ok;
  Json report;
  Vector second_order_terminal;
  Vector first_order_terminal;
};

/// Second-order system vs the first-order penalty flow on one problem.
inline CompareResult execute_compare(const RunConfig& c) {
  const BenchmarkProblem& bp = c.problem;
  const ProblemInstance& p = bp.instance;
  if (bp.z_star.size() == 0) throw ConfigError("problem: compare needs a known solution (z_star)");
  CompareResult out;
  Json& rep = out.report;
  rep["command"] = "compare";
  rep["problem"] = {{"ref", c.problem_ref}, {"definition", problem_to_json(p)}};
  rep["problem"]["definition"]["z_star"] = detail::to_json_vector(bp.z_star);
  rep["integrator"] = c.integrator_json();
  rep["warnings"] = detail::warnings_for(p);
  rep["tolerance"] = c.diagnostics.compare_tol;

  const GrowthReport growth = verify_growth(p.schedule(), p.gamma(), c.diagnostics.growth_t0);
  rep["growth"] = growth.to_json();
  if (!growth.feasible && !c.diagnostics.override_growth) {
    rep["passed"] = false;
    rep["reason"] = growth.reason;
    out.exit_code = exit_verdict;
    return out;
  }
  IntegrateOptions io;
  io.override_growth = c.diagnostics.override_growth;
  io.growth_t0 = c.diagnostics.growth_t0;

  auto summarize = [&](const Trajectory& traj) {
    const Sample& s = traj.back();
    return Json{{"terminal_x", detail::to_json_vector(s.x)},
                {"distance_to_solution_set", detail::distance_to_solutions(bp, s.x)},
                {"phi_gap_terminal", s.phi - bp.optimal_value},
                {"beta_psi_terminal", s.beta * s.psi},
                {"integration", traj.meta.to_json()}};
  };
  const Trajectory second = integrate(p, c.integrator, SystemKind::second_order, io);
  const Trajectory first = integrate(p, c.integrator, SystemKind::first_order, io);
  rep["second_order"] = summarize(second);
  rep["first_order"] = summarize(first);
  out.second_order_terminal = second.back().x;
  out.first_order_terminal = first.back().x;
  const double gap = (out.second_order_terminal - out.first_order_terminal).norm();
  rep["terminal_gap"] = gap;
  const double tol = c.diagnostics.compare_tol;
  const bool passed = second.completed() && first.completed() && gap <= tol &&
                      detail::distance_to_solutions(bp, out.second_order_terminal) <= tol &&
                      detail::distance_to_solutions(bp, out.first_order_terminal) <= tol;
  rep["passed"] = passed;
  out.exit_code = passed ? exit_ok : exit_verdict;
  return out;
}

inline int cmd_compare(const RunConfig& c, std::ostream& log) {
  for (const auto& w : detail::warnings_for(c.problem.instance)) log << "warning: " << w.get<std::string>() << '\n';
  const CompareResult r = execute_compare(c);
  const auto dir = detail::prepare_output(c.output_dir);
  detail::write_text(dir / "compare.json", r.report.dump(2) + "\n");
  if (r.report.contains("terminal_gap")) {
    log << "compare: terminal gap " << format_double(r.report["terminal_gap"].get<double>()) << ", "
        << (r.exit_code == exit_ok ? "both within tolerance of z*" : "not within tolerance") << '\n';
  } else if (r.report.contains("reason")) {
    log << r.report["reason"].get<std::string>() << '\n';
  }
  return r.exit_code;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCell {
  double gamma = 0.0;
  double alpha = 0.0;
  GrowthReport growth;
  bool integrated = false;
  bool completed = false;
  double distance = std::numeric_limits<double>::quiet_NaN();
};

/// One cell per (gamma, alpha) with beta = (1+t)^alpha; cells run on
/// `workers` threads, results in grid order.
inline std::vector<SweepCell> execute_sweep(const RunConfig& c, unsigned workers) {
  if (!c.sweep || c.sweep->gamma.empty() || c.sweep->alpha.empty()) {
    throw ConfigError("sweep: grid is empty");
  }
  if (c.problem.z_star.size() == 0) throw ConfigError("problem: sweep needs a known solution (z_star)");
  const SweepGrid& g = *c.sweep;
  std::vector<SweepCell> cells;
  for (double gamma : g.gamma) {
    for (double alpha : g.alpha) cells.push_back(SweepCell{gamma, alpha, {}, false, false, {}});
  }
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cells.size())));

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        SweepCell& cell = cells[i];
        const ProblemInstance p =
            c.problem.instance.with_gamma(cell.gamma).with_schedule(PenaltySchedule::power(cell.alpha));
        cell.growth = verify_growth(p.schedule(), p.gamma(), c.diagnostics.growth_t0);
        cell.distance = std::numeric_limits<double>::quiet_NaN();
        if (!cell.growth.feasible) continue;
        IntegrateOptions io;
        io.growth_t0 = c.diagnostics.growth_t0;
        const Trajectory traj = integrate(p, c.integrator, SystemKind::second_order, io);
        cell.integrated = true;
        cell.completed = traj.completed();
        cell.distance = c.problem.distance_to_solutions(traj.back().x);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return cells;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "gamma,alpha,feasible,k_min,distance_terminal,status\n";
  for (const SweepCell& c : cells) {
    os << format_double(c.gamma) << ',' << format_double(c.alpha) << ',' << (c.growth.feasible ? 1 : 0) << ','
       << format_double(c.growth.k_min) << ',' << (c.integrated ? format_double(c.distance) : "") << ','
       << (!c.growth.feasible ? "infeasible" : c.completed ? "completed" : "failed") << '\n';
  }
}

/// exit 0 when every feasible cell integrated to T; 2 otherwise.
inline int cmd_sweep(const RunConfig& c, unsigned workers, std::ostream& log) {
  const auto cells = execute_sweep(c, workers);
  const auto dir = detail::prepare_output(c.output_dir);
  std::ostringstream csv;
  write_sweep_csv(csv, cells);
  detail::write_text(dir / "sweep.csv", csv.str());
  bool ok = true;
  Json arr = Json::array();
  for (const SweepCell& cell : cells) {
    ok = ok && (!cell.growth.feasible || cell.completed);
    arr.push_back({{"gamma", cell.gamma},
                   {"alpha", cell.alpha},
                   {"growth", cell.growth.to_json()},
                   {"distance_terminal", detail::nullable(cell.distance)}});
  }
  Json rep = {{"command", "sweep"},
              {"problem", c.problem_ref},
              {"integrator", c.integrator_json()},
              {"cells", arr},
              {"passed", ok}};
  detail::write_text(dir / "report.json", rep.dump(2) + "\n");
  log << "sweep: " << cells.size() << " cells (" << (dir / "sweep.csv").string() << ")\n";
  return ok ? exit_ok : exit_verdict;
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_EXPERIMENT_HPP
