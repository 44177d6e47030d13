#ifndef PENALTYFLOW_DYNAMICS_HPP
#define PENALTYFLOW_DYNAMICS_HPP

// The penalized second-order system
//   x'' + gamma x' + grad phi(x) + beta(t) grad psi(x) = 0,  x(0)=u0, x'(0)=v0,
// its first-order companion x' = -grad phi(x) - beta(t) grad psi(x), and the
// heavy-ball case psi = 0.

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "penaltyflow/convex.hpp"
#include "penaltyflow/ode.hpp"
#include "penaltyflow/schedules.hpp"

namespace penaltyflow {

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GrowthViolation : public std::runtime_error {
 public:
  explicit GrowthViolation(GrowthReport report)
      : std::runtime_error(report.reason), report_(std::move(report)) {}
  const GrowthReport& report() const { return report_; }

 private:
  GrowthReport report_;
};

/// (phi, psi, gamma, beta, u0, v0) plus an optional known optimum.
class ProblemInstance {
 public:
  ProblemInstance(SmoothConvexFunction phi, PenaltyFunction psi, double gamma, PenaltySchedule schedule, Vector u0,
                  Vector v0, std::optional<Vector> analytic_solution = std::nullopt)
      : phi_(std::move(phi)),
        psi_(std::move(psi)),
        gamma_(gamma),
        schedule_(std::move(schedule)),
        u0_(std::move(u0)),
        v0_(std::move(v0)),
        z_star_(std::move(analytic_solution)) {
    if (!(gamma_ > 0.0)) throw std::invalid_argument("ProblemInstance: gamma must be positive");
    const auto n = phi_.dimension();
    if (psi_.dimension() != n || u0_.size() != n || v0_.size() != n || (z_star_ && z_star_->size() != n)) {
      throw DimensionError("ProblemInstance: dimensions of phi, psi, u0, v0 disagree");
    }
    if (!phi_.lower_bound()) {
      throw std::invalid_argument("ProblemInstance: phi must carry a lower bound (bounded from below)");
    }
    if (!u0_.allFinite() || !v0_.allFinite()) throw std::invalid_argument("ProblemInstance: non-finite initial data");
  }

  const SmoothConvexFunction& phi() const { return phi_; }
  const PenaltyFunction& psi() const { return psi_; }
  double gamma() const { return gamma_; }
  const PenaltySchedule& schedule() const { return schedule_; }
  const Vector& u0() const { return u0_; }
  const Vector& v0() const { return v0_; }
  const std::optional<Vector>& analytic_solution() const { return z_star_; }
  Eigen::Index dimension() const { return phi_.dimension(); }

  ProblemInstance with_gamma(double gamma) const {
    return {phi_, psi_, gamma, schedule_, u0_, v0_, z_star_};
  }
  ProblemInstance with_schedule(PenaltySchedule s) const {
    return {phi_, psi_, gamma_, std::move(s), u0_, v0_, z_star_};
  }
  ProblemInstance with_initial(Vector u0, Vector v0) const {
    return {phi_, psi_, gamma_, schedule_, std::move(u0), std::move(v0), z_star_};
  }

 private:
  SmoothConvexFunction phi_;
  PenaltyFunction psi_;
  double gamma_;
  PenaltySchedule schedule_;
  Vector u0_;
  Vector v0_;
  std::optional<Vector> z_star_;
};

struct State {
  double t = 0.0;
  Vector x;
  Vector v;
};

/// One output sample with the quantities every diagnostic needs.
struct Sample {
  double t = 0.0;
  Vector x;
  Vector v;
  double phi = 0.0;
  double psi = 0.0;
  double beta = 0.0;
  Vector grad_phi;
  Vector grad_psi;
};

enum class SystemKind { second_order, first_order };
enum class Method { dopri45, rk4 };

inline const char* to_string(SystemKind s) { return s == SystemKind::second_order ? "second_order" : "first_order"; }
inline const char* to_string(Method m) { return m == Method::dopri45 ? "dopri45" : "rk4"; }
inline const char* to_string(ode::Status s) {
  switch (s) {
    case ode::Status::completed: return "completed";
    case ode::Status::step_underflow: return "step_underflow";
    case ode::Status::non_finite: return "non_finite";
    case ode::Status::rhs_error: return "rhs_error";
  }
  return "?";
}

struct IntegratorConfig {
  Method method = Method::dopri45;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.05;
  /// For rk4 this is the fixed step.
  double initial_step = 1e-2;
  double t_end = 100.0;
  int sample_count = 10001;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0) || !(abs_tol > 0.0 && abs_tol < 1.0)) {
      throw std::invalid_argument("IntegratorConfig: tolerances must lie in (0, 1)");
    }
    if (!(t_end > 0.0)) throw std::invalid_argument("IntegratorConfig: t_end must be positive");
    if (!(max_step > 0.0) || !(initial_step > 0.0)) throw std::invalid_argument("IntegratorConfig: steps must be positive");
    if (sample_count < 2) throw std::invalid_argument("IntegratorConfig: sample_count must be >= 2");
  }

  /// Uniform output grid 0 = t_0 < ... < t_{m-1} = t_end.
  std::vector<double> output_grid() const {
    std::vector<double> g(static_cast<std::size_t>(sample_count));
    for (int i = 0; i < sample_count; ++i) g[static_cast<std::size_t>(i)] = t_end * i / (sample_count - 1);
    g.back() = t_end;
    return g;
  }
};

struct IntegrationMeta {
  SystemKind system = SystemKind::second_order;
  Method method = Method::dopri45;
  long steps = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  double max_error_estimate = 0.0;
  double min_accepted_step = 0.0;
  double initial_step = 0.0;
  ode::Status status = ode::Status::completed;
  std::string diagnostic;
  bool growth_overridden = false;
  std::optional<GrowthReport> growth;

  Json to_json() const {
    Json j = {{"system", to_string(system)},
              {"method", to_string(method)},
              {"steps", steps},
              {"rejected_steps", rejected},
              {"rhs_evaluations", rhs_evaluations},
              {"max_error_estimate", max_error_estimate},
              {"min_accepted_step", min_accepted_step},
              {"initial_step", initial_step},
              {"status", to_string(status)},
              {"diagnostic", diagnostic},
              {"growth_overridden", growth_overridden}};
    return j;
  }
};

struct Trajectory {
  std::vector<Sample> samples;
  IntegrationMeta meta;

  bool completed() const { return meta.status == ode::Status::completed; }
  const Sample& back() const { return samples.back(); }
  std::size_t size() const { return samples.size(); }
};

/// (x', v') = (v, -gamma v - grad phi(x) - beta(t) grad psi(x)).
inline std::pair<Vector, Vector> rhs_second_order(const ProblemInstance& p, const State& s) {
  require_dimension(p.dimension(), s.x, "rhs_second_order");
  require_dimension(p.dimension(), s.v, "rhs_second_order");
  const Vector gphi = p.phi().gradient(s.x);
  const Vector gpsi = p.psi().gradient(s.x);
  if (!gphi.allFinite() || !gpsi.allFinite()) {
    throw NonFiniteGradient("non-finite gradient at t=" + std::to_string(s.t));
  }
  Vector acc = -p.gamma() * s.v - gphi - p.schedule().beta(s.t) * gpsi;
  return {s.v, std::move(acc)};
}

/// x' = -grad phi(x) - beta(t) grad psi(x).
inline Vector rhs_first_order(const ProblemInstance& p, double t, const Vector& x) {
  require_dimension(p.dimension(), x, "rhs_first_order");
  const Vector gphi = p.phi().gradient(x);
  const Vector gpsi = p.psi().gradient(x);
  if (!gphi.allFinite() || !gpsi.allFinite()) {
    throw NonFiniteGradient("non-finite gradient at t=" + std::to_string(t));
  }
  return -gphi - p.schedule().beta(t) * gpsi;
}

inline Sample make_sample(const ProblemInstance& p, double t, Vector x, Vector v) {
  Sample s;
  s.t = t;
  s.phi = p.phi().value(x);
  s.psi = p.psi().value(x);
  s.beta = p.schedule().beta(t);
  s.grad_phi = p.phi().gradient(x);
  s.grad_psi = p.psi().gradient(x);
  s.x = std::move(x);
  s.v = std::move(v);
  return s;
}

struct IntegrateOptions {
  /// Integrate even when the growth condition fails; recorded in metadata.
  bool override_growth = false;
  double growth_t0 = 0.0;
};

/// h0 = min(initial_step, 0.01 / (1 + L_phi + beta(0) L_psi)).
inline double initial_step_heuristic(const ProblemInstance& p, const IntegratorConfig& cfg) {
  const double scale = 1.0 + p.phi().grad_lipschitz() + p.schedule().beta(0.0) * p.psi().base().grad_lipschitz();
  return std::min(cfg.initial_step, 0.01 / scale);
}

inline Trajectory integrate(const ProblemInstance& p, const IntegratorConfig& cfg,
                            SystemKind system = SystemKind::second_order, const IntegrateOptions& options = {}) {
  cfg.validate();
  Trajectory traj;
  traj.meta.system = system;
  traj.meta.method = cfg.method;

  if (system == SystemKind::second_order) {
    GrowthReport growth = verify_growth(p.schedule(), p.gamma(), options.growth_t0);
    if (!growth.feasible) {
      if (!options.override_growth) throw GrowthViolation(growth);
      traj.meta.growth_overridden = true;
    }
    traj.meta.growth = std::move(growth);
  }

  const Eigen::Index n = p.dimension();
  const std::vector<double> grid = cfg.output_grid();
  traj.samples.reserve(grid.size());
  std::string rhs_failure;

  ode::Rhs rhs;
  ode::Observer observer;
  Vector y0;
  if (system == SystemKind::second_order) {
    y0.resize(2 * n);
    y0 << p.u0(), p.v0();
    rhs = [&p, n, &rhs_failure](double t, const Vector& y) -> Vector {
      try {
        auto [dx, dv] = rhs_second_order(p, State{t, y.head(n), y.tail(n)});
        Vector out(2 * n);
        out << dx, dv;
        return out;
      } catch (const NonFiniteGradient& e) {
        rhs_failure = e.what();
        return Vector::Constant(2 * n, std::numeric_limits<double>::quiet_NaN());
      }
    };
    observer = [&p, &traj, n](double t, const Vector& y) {
      traj.samples.push_back(make_sample(p, t, y.head(n), y.tail(n)));
    };
  } else {
    y0 = p.u0();
    rhs = [&p, n, &rhs_failure](double t, const Vector& x) -> Vector {
      try {
        return rhs_first_order(p, t, x);
      } catch (const NonFiniteGradient& e) {
        rhs_failure = e.what();
        return Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
      }
    };
    observer = [&p, &traj](double t, const Vector& x) {
      Vector v = rhs_first_order(p, t, x);
      traj.samples.push_back(make_sample(p, t, x, std::move(v)));
    };
  }

  ode::Stats st;
  if (cfg.method == Method::dopri45) {
    ode::AdaptiveOptions opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_step = cfg.max_step;
    opt.initial_step = initial_step_heuristic(p, cfg);
    traj.meta.initial_step = opt.initial_step;
    st = ode::integrate_dopri45(rhs, y0, grid, opt, observer);
  } else {
    traj.meta.initial_step = cfg.initial_step;
    st = ode::integrate_rk4(rhs, y0, grid, cfg.initial_step, observer);
  }

  if (system == SystemKind::second_order && !traj.samples.empty()) {
    // The first sample is (0, u0, v0) exactly.
    traj.samples.front().x = p.u0();
    traj.samples.front().v = p.v0();
  }

  traj.meta.steps = st.steps;
  traj.meta.rejected = st.rejected;
  traj.meta.rhs_evaluations = st.rhs_evaluations;
  traj.meta.max_error_estimate = st.max_error_estimate;
  traj.meta.min_accepted_step = std::isfinite(st.min_accepted_step) ? st.min_accepted_step : 0.0;
  traj.meta.status = st.status;
  traj.meta.diagnostic = st.diagnostic;
  if (!rhs_failure.empty() && st.status != ode::Status::completed) {
    traj.meta.diagnostic += "; " + rhs_failure;
  }
  return traj;
}

/// Heavy ball: the second-order system with psi = 0 (any schedule).
inline ProblemInstance heavy_ball_instance(const SmoothConvexFunction& phi, double gamma, const Vector& u0,
                                           const Vector& v0) {
  return {phi, zero_penalty(phi.dimension()), gamma, PenaltySchedule::constant(1.0), u0, v0};
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double energy_of(const Sample& s) { return 0.5 * s.v.squaredNorm() + s.phi + s.beta * s.psi; }

/// Header t, x_0..x_{n-1}, v_0..v_{n-1}, phi, psi, beta, E.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.samples.empty()) return;
  const Eigen::Index n = traj.samples.front().x.size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 0; i < n; ++i) os << ",v_" << i;
  os << ",phi,psi,beta,E\n";
  for (const Sample& s : traj.samples) {
    os << format_double(s.t);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.x[i]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.v[i]);
    os << ',' << format_double(s.phi) << ',' << format_double(s.psi) << ',' << format_double(s.beta) << ','
       << format_double(energy_of(s)) << '\n';
  }
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_DYNAMICS_HPP
