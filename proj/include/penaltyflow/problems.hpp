#ifndef PENALTYFLOW_PROBLEMS_HPP
#define PENALTYFLOW_PROBLEMS_HPP

// Benchmark problems min { phi(x) : x in argmin psi } with known solution sets,
// a named registry and the JSON problem schema:
//
//   {"phi":<function>, "psi":<penalty>, "gamma":g, "schedule":<schedule>,
//    "u0":[..], "v0":[..], "z_star":[..]?}

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "penaltyflow/diagnostics.hpp"

namespace penaltyflow {

struct RegimeTags {
  bool strongly_convex = false;
  bool divergent_beta = false;
  bool heavy_ball = false;

  Json to_json() const {
    return {{"strongly_convex", strongly_convex}, {"divergent_beta", divergent_beta}, {"heavy_ball", heavy_ball}};
  }
};

struct BenchmarkProblem {
  std::string name;
  ProblemInstance instance;
  /// The solution when S is a singleton, otherwise a representative of S.
  Vector z_star;
  double optimal_value = 0.0;
  RegimeTags tags;
  std::string provenance;
  bool unique_solution = true;
  /// dist(x, S).
  std::function<double(const Vector&)> distance_to_solutions;
  /// Points of argmin psi on which phi(y) >= phi(z_star) is asserted.
  std::vector<Vector> probes;

  bool in_solution_set(const Vector& x, double tol = 1e-8) const { return distance_to_solutions(x) <= tol; }

  Json to_json() const;
};

namespace detail {

inline RegimeTags regime_of(const ProblemInstance& p) {
  RegimeTags t;
  t.strongly_convex = p.phi().strong_convexity() > 0.0;
  t.divergent_beta = p.schedule().divergent();
  t.heavy_ball = p.psi().base().kind() == "zero";
  return t;
}

inline std::vector<Vector> zero_set_probes(const ClosedConvexSet& C, const Vector& around, int count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  Vector y(around.size());
  for (int i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < y.size(); ++j) y[j] = around[j] + g(rng);
    out.push_back(C.project(y));
  }
  return out;
}

inline BenchmarkProblem unique_problem(std::string name, ProblemInstance inst, Vector z, std::string provenance) {
  const RegimeTags tags = regime_of(inst);
  const double opt = inst.phi().value(z);
  auto probes = zero_set_probes(inst.psi().zero_set(), z, 32, 0xbe7c);
  auto dist = [z](const Vector& x) { return (x - z).norm(); };
  return BenchmarkProblem{std::move(name), std::move(inst), std::move(z), opt, tags, std::move(provenance),
                          true, dist, std::move(probes)};
}

}  // namespace detail

/// phi = 1/2 ||x - a||^2, psi = 1/2 dist^2(., C) with C affine; z* = P_C(a).
inline BenchmarkProblem make_affine_constrained_quadratic(const Vector& a, const ClosedConvexSet& C, double gamma,
                                                          PenaltySchedule schedule) {
  require_dimension(C.dimension(), a, "make_affine_constrained_quadratic");
  if (C.kind() != "affine") throw std::invalid_argument("make_affine_constrained_quadratic: C must be affine");
  const Eigen::Index n = a.size();
  ProblemInstance inst(shifted_norm(a), dist2_penalty(C), gamma, std::move(schedule), Vector::Zero(n), Vector::Zero(n));
  Vector z = C.project(a);
  ProblemInstance with_z(inst.phi(), inst.psi(), inst.gamma(), inst.schedule(), inst.u0(), inst.v0(), z);
  return detail::unique_problem("affine-quadratic", std::move(with_z), std::move(z),
                                "z* = orthogonal projection of a onto C (strongly convex phi, unique solution)");
}

/// phi = 1/2 ||x - a||^2, psi = 1/2 dist^2(., {<u, x> <= b}).
inline BenchmarkProblem make_halfspace_problem(const Vector& a, const Vector& u, double b, double gamma,
                                               PenaltySchedule schedule) {
  require_dimension(u.size(), a, "make_halfspace_problem");
  if (!(u.norm() > 0.0)) throw std::invalid_argument("make_halfspace_problem: normal must be nonzero");
  const Eigen::Index n = a.size();
  const ClosedConvexSet H = halfspace(u, b);
  const double s = u.dot(a) - b;
  Vector z = s <= 0.0 ? Vector(a) : Vector(a - (s / u.squaredNorm()) * u);
  ProblemInstance inst(shifted_norm(a), dist2_penalty(H), gamma, std::move(schedule), Vector::Zero(n),
                       Vector::Zero(n), z);
  return detail::unique_problem("halfspace", std::move(inst), std::move(z),
                                s <= 0.0 ? "constraint inactive: z* = a" : "KKT: z* = a - ((<u,a> - b)/||u||^2) u");
}

/// phi = 1/2 (x1 - 1)^2 on R^2, flat in x2. With psi = 1/2 dist^2(., unit
/// ball) the solution set is {(1, 0)}; the heavy-ball variant (psi = 0) has
/// S = {x1 = 1}.
inline BenchmarkProblem make_flat_objective_problem(double gamma, PenaltySchedule schedule, bool heavy_ball = false) {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  const SmoothConvexFunction phi = quadratic(A, Vector::Unit(2, 0), 0.5);
  const Vector u0 = Vector::Zero(2);
  if (heavy_ball) {
    ProblemInstance inst(phi, zero_penalty(2), gamma, std::move(schedule), u0, Vector::Zero(2));
    BenchmarkProblem bp{"flat-heavy-ball", inst, Vector::Unit(2, 0), 0.0, detail::regime_of(inst),
                        "unconstrained argmin of a function of x1 only: S = {x1 = 1}", false,
                        [](const Vector& x) { return std::abs(x[0] - 1.0); },
                        detail::zero_set_probes(whole_space(2), Vector::Unit(2, 0), 32, 0xf1a7)};
    return bp;
  }
  const ClosedConvexSet B = ball(Vector::Zero(2), 1.0);
  Vector z = Vector::Unit(2, 0);
  ProblemInstance inst(phi, dist2_penalty(B), gamma, std::move(schedule), u0, Vector::Zero(2), z);
  return detail::unique_problem("flat-ball", std::move(inst), std::move(z),
                                "phi depends on x1 only; x1 = 1 meets the unit ball at the single point (1, 0)");
}

/// phi = 1/2 ||x||^2, psi = 0, gamma = 1, u0 = (1, 0).
inline BenchmarkProblem make_heavy_ball_problem() {
  ProblemInstance inst(shifted_norm(Vector::Zero(2)), zero_penalty(2), 1.0, PenaltySchedule::constant(1.0),
                       Vector::Unit(2, 0), Vector::Zero(2), Vector::Zero(2));
  return detail::unique_problem("heavy-ball", std::move(inst), Vector::Zero(2), "unconstrained minimizer of 1/2||x||^2");
}

struct ProblemCertificate {
  SolutionCertificate solution;
  double penalty_at_solution = 0.0;
  double optimal_value_error = 0.0;
  double min_probe_gap = 0.0;  // min over probes of phi(y) - phi(z*)
  bool passed = false;
  std::string failure;

  Json to_json() const {
    return {{"solution", solution.to_json()},
            {"penalty_at_solution", penalty_at_solution},
            {"optimal_value_error", optimal_value_error},
            {"min_probe_gap", min_probe_gap},
            {"passed", passed},
            {"failure", failure}};
  }
};

/// Re-derives optimality of z* over 1000 sampled feasible points and checks
/// the problem invariants.
inline ProblemCertificate certify(const BenchmarkProblem& bp, int samples = 1000) {
  const ProblemInstance& p = bp.instance;
  ProblemCertificate c;
  c.solution = certify_solution(p, bp.z_star, samples);
  c.penalty_at_solution = p.psi().value(bp.z_star);
  c.optimal_value_error = std::abs(bp.optimal_value - p.phi().value(bp.z_star));
  c.min_probe_gap = std::numeric_limits<double>::infinity();
  for (const Vector& y : bp.probes) c.min_probe_gap = std::min(c.min_probe_gap, p.phi().value(y) - bp.optimal_value);
  if (!c.solution.passed) c.failure = c.solution.failure;
  else if (c.penalty_at_solution > 1e-12) c.failure = "psi(z*) = " + format_double(c.penalty_at_solution);
  else if (c.optimal_value_error > 1e-12) c.failure = "optimal_value differs from phi(z*)";
  else if (c.min_probe_gap < -1e-9) c.failure = "a probe in argmin psi beats phi(z*)";
  c.passed = c.failure.empty();
  return c;
}

inline Json problem_to_json(const ProblemInstance& p) {
  Json j = {{"phi", p.phi().descriptor()},
            {"psi", p.psi().base().descriptor()},
            {"gamma", p.gamma()},
            {"schedule", p.schedule().to_json()},
            {"u0", detail::to_json_vector(p.u0())},
            {"v0", detail::to_json_vector(p.v0())}};
  if (p.analytic_solution()) j["z_star"] = detail::to_json_vector(*p.analytic_solution());
  return j;
}

inline Json BenchmarkProblem::to_json() const {
  Json j = problem_to_json(instance);
  j["z_star"] = detail::to_json_vector(z_star);
  return Json{{"name", name},
              {"problem", j},
              {"optimal_value", optimal_value},
              {"tags", tags.to_json()},
              {"unique_solution", unique_solution},
              {"provenance", provenance}};
}

/// Inverse of problem_to_json. When z_star is given it is certified.
inline BenchmarkProblem problem_from_json(const Json& j, const std::string& where = "problem") {
  using namespace detail;
  require_keys(j, where, {"phi", "psi", "gamma", "schedule", "u0", "v0"}, {"z_star"});
  SmoothConvexFunction phi = function_from_json(j["phi"], where + ".phi");
  PenaltyFunction psi = penalty_from_json(j["psi"], where + ".psi");
  PenaltySchedule s = schedule_from_json(j["schedule"], where + ".schedule");
  const double gamma = json_number(j["gamma"], where + ".gamma");
  Vector u0 = json_vector(j["u0"], where + ".u0");
  Vector v0 = json_vector(j["v0"], where + ".v0");
  std::optional<Vector> z;
  if (j.contains("z_star")) z = json_vector(j["z_star"], where + ".z_star");
  ProblemInstance inst = build(where, [&]() { return ProblemInstance(phi, psi, gamma, s, u0, v0, z); });
  if (!z) {
    return BenchmarkProblem{"inline", inst, Vector(), 0.0, regime_of(inst), "no solution supplied", false,
                            [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); }, {}};
  }
  BenchmarkProblem bp = unique_problem("inline", inst, *z, "user-supplied z_star");
  const ProblemCertificate c = certify(bp);
  if (!c.passed) throw ConfigError(where + ".z_star: certification failed: " + c.failure);
  return bp;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace detail {

/// Rows e_i + e_{i+1}, i < m, right-hand side 1: a full-row-rank affine set.
inline ClosedConvexSet banded_affine(Eigen::Index n, Eigen::Index m) {
  Matrix M = Matrix::Zero(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    M(i, i) = 1.0;
    M(i, i + 1) = 1.0;
  }
  return affine_subspace(M, Vector::Ones(m));
}

inline Vector ramp(Eigen::Index n) {
  Vector a(n);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = 1.0 + std::sin(static_cast<double>(i + 1));
  return a;
}

inline BenchmarkProblem renamed(BenchmarkProblem bp, std::string name) {
  bp.name = std::move(name);
  return bp;
}

inline ClosedConvexSet x2_zero_line() {
  Matrix M(1, 2);
  M << 0.0, 1.0;
  return affine_subspace(M, Vector::Zero(1));
}

}  // namespace detail

/// phi = 1/2 ||x - (2,1)||^2, psi = 1/2 dist^2(., {x2 = 0}), gamma = 3,
/// beta = (1+t)^2, u0 = v0 = 0; z* = (2, 0).
inline BenchmarkProblem flagship_problem() {
  Vector a(2);
  a << 2.0, 1.0;
  return detail::renamed(make_affine_constrained_quadratic(a, detail::x2_zero_line(), 3.0, PenaltySchedule::power(2.0)),
                         "affine-quadratic-2d");
}

inline const std::map<std::string, std::function<BenchmarkProblem()>>& problem_registry() {
  static const std::map<std::string, std::function<BenchmarkProblem()>> registry = {
      {"affine-quadratic-2d", flagship_problem},
      {"affine-quadratic-10d",
       [] {
         return detail::renamed(make_affine_constrained_quadratic(detail::ramp(10), detail::banded_affine(10, 5), 3.0,
                                                                  PenaltySchedule::power(2.0)),
                                "affine-quadratic-10d");
       }},
      {"affine-quadratic-100d",
       [] {
         return detail::renamed(make_affine_constrained_quadratic(detail::ramp(100), detail::banded_affine(100, 50),
                                                                  3.0, PenaltySchedule::power(2.0)),
                                "affine-quadratic-100d");
       }},
      {"affine-quadratic-diagonal",
       [] {
         Matrix M(1, 2);
         M << 1.0, -1.0;
         Vector a(2);
         a << 0.0, 3.0;
         return detail::renamed(make_affine_constrained_quadratic(a, affine_subspace(M, Vector::Zero(1)), 3.0,
                                                                  PenaltySchedule::power(2.0)),
                                "affine-quadratic-diagonal");
       }},
      {"halfspace-2d",
       [] {
         return detail::renamed(make_halfspace_problem(Vector::Ones(2), Vector::Ones(2), 1.0, 3.0,
                                                       PenaltySchedule::power(2.0)),
                                "halfspace-2d");
       }},
      {"halfspace-inactive-2d",
       [] {
         return detail::renamed(make_halfspace_problem(Vector::Zero(2), Vector::Ones(2), 1.0, 3.0,
                                                       PenaltySchedule::power(2.0)),
                                "halfspace-inactive-2d");
       }},
      {"flat-ball-2d",
       [] { return detail::renamed(make_flat_objective_problem(3.0, PenaltySchedule::power(2.0)), "flat-ball-2d"); }},
      {"flat-heavy-ball-2d",
       [] {
         return detail::renamed(make_flat_objective_problem(1.0, PenaltySchedule::constant(1.0), true),
                                "flat-heavy-ball-2d");
       }},
      {"heavy-ball-2d", [] { return detail::renamed(make_heavy_ball_problem(), "heavy-ball-2d"); }},
      {"huber-halfspace-2d",
       [] {
         Vector a(2);
         a << 2.0, 0.0;
         const Vector u = Vector::Unit(2, 0);
         ProblemInstance inst(shifted_norm(a), huber_hinge_penalty(u, 1.0, 0.5), 3.0, PenaltySchedule::power(2.0),
                              Vector::Zero(2), Vector::Zero(2), Vector::Unit(2, 0));
         return detail::unique_problem("huber-halfspace-2d", std::move(inst), Vector::Unit(2, 0),
                                       "1-D projection of (2,0) onto {x1 <= 1}");
       }},
  };
  return registry;
}

inline std::vector<std::string> problem_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : problem_registry()) names.push_back(name);
  return names;
}

inline BenchmarkProblem problem_by_name(const std::string& name) {
  const auto& r = problem_registry();
  const auto it = r.find(name);
  if (it == r.end()) throw ConfigError("unknown problem '" + name + "'");
  return it->second();
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_PROBLEMS_HPP
