#ifndef PENALTYFLOW_DIAGNOSTICS_HPP
#define PENALTYFLOW_DIAGNOSTICS_HPP

// Lyapunov diagnostics along sampled trajectories: the energy
//   E(t) = 1/2 ||x'||^2 + phi(x) + beta(t) psi(x),
// its dissipation law E' = -gamma ||x'||^2 + beta' psi(x), the anchor
// function h_z(t) = 1/2 ||x(t) - z||^2 and the differential inequalities that
// tie them together, the Fenchel-conjugate integrability condition on
// beta(t) [psi*(p/beta) - sigma(p/beta)], and finite-horizon tail criteria
// for the limit claims.
//
// Time derivatives of sampled scalars are taken by three-point central
// differences on the output grid (endpoints excluded). Discretization error
// is estimated by Richardson comparison of the h and 2h stencils.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "penaltyflow/dynamics.hpp"

namespace penaltyflow {

class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Sampled calculus
// ---------------------------------------------------------------------------

namespace numeric {

/// Three-point first derivative at interior index i (nonuniform grid).
inline double central_first(std::span<const double> t, std::span<const double> f, std::size_t i, std::size_t w = 1) {
  const double hm = t[i] - t[i - w];
  const double hp = t[i + w] - t[i];
  return (f[i + w] * hm * hm - f[i - w] * hp * hp + f[i] * (hp * hp - hm * hm)) / (hm * hp * (hm + hp));
}

/// Three-point second derivative at interior index i (nonuniform grid).
inline double central_second(std::span<const double> t, std::span<const double> f, std::size_t i, std::size_t w = 1) {
  const double hm = t[i] - t[i - w];
  const double hp = t[i + w] - t[i];
  return 2.0 * (f[i + w] * hm - f[i] * (hm + hp) + f[i - w] * hp) / (hm * hp * (hm + hp));
}

/// Derivative series on interior samples 1..n-2, with a Richardson error
/// estimate |D_h - D_2h| / 3 (neighbor's estimate where i +- 2 is missing).
struct Derivative {
  std::vector<double> value;  // indexed like the grid; endpoints are NaN
  std::vector<double> error;
};

inline Derivative differentiate(std::span<const double> t, std::span<const double> f, int order) {
  const std::size_t n = t.size();
  Derivative d;
  d.value.assign(n, std::numeric_limits<double>::quiet_NaN());
  d.error.assign(n, 0.0);
  if (n < 3) return d;
  auto D = [&](std::size_t i, std::size_t w) { return order == 1 ? central_first(t, f, i, w) : central_second(t, f, i, w); };
  for (std::size_t i = 1; i + 1 < n; ++i) d.value[i] = D(i, 1);
  for (std::size_t i = 2; i + 2 < n; ++i) d.error[i] = std::abs(d.value[i] - D(i, 2)) / 3.0;
  if (n >= 5) {
    d.error[1] = d.error[2];
    d.error[n - 2] = d.error[n - 3];
  }
  return d;
}

/// Running trapezoidal integral; out[0] = 0.
inline std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return out;
}

/// First index with t[i] >= value.
inline std::size_t index_at_or_after(std::span<const double> t, double value) {
  return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), value) - t.begin());
}

/// (I(T) - I(T/2)) / I(T) for a nonnegative running integral; 0 when I == 0.
inline double tail_ratio(std::span<const double> t, std::span<const double> cumulative) {
  const double total = cumulative.back();
  const std::size_t mid = std::min(index_at_or_after(t, 0.5 * t.back()), t.size() - 1);
  const double inc = total - cumulative[mid];
  if (total == 0.0) return inc == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(inc) / std::abs(total);
}

/// |I(T) - I(T/2)| / sup |I| for a signed running integral.
inline double signed_tail_ratio(std::span<const double> t, std::span<const double> cumulative) {
  double sup = 0.0;
  for (double v : cumulative) sup = std::max(sup, std::abs(v));
  const std::size_t mid = std::min(index_at_or_after(t, 0.5 * t.back()), t.size() - 1);
  const double inc = std::abs(cumulative.back() - cumulative[mid]);
  if (sup == 0.0) return inc == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return inc / sup;
}

/// Nonincreasing over [t_from, T] up to a relative slack.
inline bool nonincreasing_from(std::span<const double> t, std::span<const double> f, double t_from,
                               double abs_slack = 1e-12, double rel_slack = 1e-9) {
  for (std::size_t i = std::max<std::size_t>(index_at_or_after(t, t_from), 1); i < t.size(); ++i) {
    if (f[i] > f[i - 1] + abs_slack + rel_slack * std::abs(f[i - 1])) return false;
  }
  return true;
}

/// Least-squares slope of f against log t over [t_from, T] is <= 0.
inline bool decreasing_trend_from(std::span<const double> t, std::span<const double> f, double t_from) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, n = 0.0;
  for (std::size_t i = index_at_or_after(t, t_from); i < t.size(); ++i) {
    if (!(t[i] > 0.0)) continue;
    const double x = std::log(t[i]);
    sx += x;
    sy += f[i];
    sxx += x * x;
    sxy += x * f[i];
    n += 1.0;
  }
  if (n < 2.0) return false;
  return n * sxy - sx * sy <= 0.0;
}

}  // namespace numeric

inline std::vector<double> sample_times(const Trajectory& traj) {
  std::vector<double> t;
  t.reserve(traj.size());
  for (const Sample& s : traj.samples) t.push_back(s.t);
  return t;
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

struct EnergySample {
  double t = 0.0;
  double E = 0.0;
  double phi_val = 0.0;
  double psi_val = 0.0;
  double beta_val = 0.0;
  double kinetic = 0.0;
};

inline std::vector<EnergySample> energy_series(const Trajectory& traj, const ProblemInstance& p) {
  (void)p;
  std::vector<EnergySample> out;
  out.reserve(traj.size());
  for (const Sample& s : traj.samples) {
    EnergySample e;
    e.t = s.t;
    e.kinetic = 0.5 * s.v.squaredNorm();
    e.phi_val = s.phi;
    e.psi_val = s.psi;
    e.beta_val = s.beta;
    e.E = e.kinetic + e.phi_val + e.beta_val * e.psi_val;
    out.push_back(e);
  }
  return out;
}

inline void write_energy_csv(std::ostream& os, std::span<const EnergySample> energy) {
  os << "t,E,kinetic,phi,psi,beta\n";
  for (const EnergySample& e : energy) {
    os << format_double(e.t) << ',' << format_double(e.E) << ',' << format_double(e.kinetic) << ','
       << format_double(e.phi_val) << ',' << format_double(e.psi_val) << ',' << format_double(e.beta_val) << '\n';
  }
}

struct DissipationResidual {
  std::vector<double> times;      // interior sample times
  std::vector<double> residuals;  // |E'_fd - (-gamma ||v||^2 + beta' psi)|
  std::vector<double> errors;     // Richardson estimate of the E'_fd error
  double max_step = 0.0;
  double max_residual = 0.0;
  double max_error_estimate = 0.0;
  /// max(1, |E(0)|).
  double energy_scale = 1.0;

  Json to_json() const {
    return {{"max_residual", max_residual},
            {"max_error_estimate", max_error_estimate},
            {"energy_scale", energy_scale},
            {"max_step", max_step},
            {"samples", residuals.size()}};
  }
};

/// Residual of the dissipation law at interior samples, using the supplied
/// energy column (so corrupted columns can be audited).
inline DissipationResidual dissipation_residual(const Trajectory& traj, const ProblemInstance& p,
                                                std::span<const EnergySample> energy) {
  if (traj.size() < 3) throw std::invalid_argument("dissipation_residual: need at least 3 samples");
  if (energy.size() != traj.size()) throw std::invalid_argument("dissipation_residual: energy/trajectory size mismatch");
  const std::vector<double> t = sample_times(traj);
  std::vector<double> E(energy.size());
  for (std::size_t i = 0; i < energy.size(); ++i) E[i] = energy[i].E;
  DissipationResidual r;
  for (std::size_t i = 1; i < t.size(); ++i) r.max_step = std::max(r.max_step, t[i] - t[i - 1]);
  r.energy_scale = std::max(1.0, std::abs(E.front()));
  const numeric::Derivative dE = numeric::differentiate(t, E, 1);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const Sample& s = traj.samples[i];
    const double law = -p.gamma() * s.v.squaredNorm() + p.schedule().beta_dot(s.t) * s.psi;
    const double res = std::abs(dE.value[i] - law);
    r.times.push_back(s.t);
    r.residuals.push_back(res);
    r.errors.push_back(dE.error[i]);
    r.max_residual = std::max(r.max_residual, res);
    r.max_error_estimate = std::max(r.max_error_estimate, dE.error[i]);
  }
  return r;
}

inline DissipationResidual dissipation_residual(const Trajectory& traj, const ProblemInstance& p) {
  const auto energy = energy_series(traj, p);
  return dissipation_residual(traj, p, energy);
}

// ---------------------------------------------------------------------------
// Solution-set certificates
// ---------------------------------------------------------------------------

struct SolutionCertificate {
  double membership_residual = 0.0;  // ||z - P_C(z)||
  double max_vi_violation = 0.0;     // max_y -<grad phi(z), y - z>, y sampled in C
  bool passed = false;
  std::string failure;

  Json to_json() const {
    return {{"membership_residual", membership_residual},
            {"max_vi_violation", max_vi_violation},
            {"passed", passed},
            {"failure", failure}};
  }
};

/// z in S iff z in argmin psi and <grad phi(z), y - z> >= 0 for all y in
/// argmin psi; the latter is checked on `samples` projected random points.
inline SolutionCertificate certify_solution(const SmoothConvexFunction& phi, const PenaltyFunction& psi,
                                            const Vector& z, int samples = 1000, std::uint64_t seed = 0x5eed,
                                            double tol = 1e-8) {
  require_dimension(phi.dimension(), z, "certify_solution");
  SolutionCertificate c;
  const ClosedConvexSet& C = psi.zero_set();
  c.membership_residual = C.distance(z);
  const Vector g = phi.gradient(z);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Vector y(z.size());
  auto probe = [&](const Vector& cand) { c.max_vi_violation = std::max(c.max_vi_violation, -g.dot(cand - z)); };
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = z[i] + u(rng);
    probe(C.project(y));
  }
  if (c.membership_residual > tol) {
    c.failure = "membership: dist(z, argmin psi) = " + format_double(c.membership_residual);
  } else if (c.max_vi_violation > tol) {
    c.failure = "optimality: variational inequality violated by " + format_double(c.max_vi_violation);
  }
  c.passed = c.failure.empty();
  return c;
}

inline SolutionCertificate certify_solution(const ProblemInstance& p, const Vector& z, int samples = 1000) {
  return certify_solution(p.phi(), p.psi(), z, samples);
}

// ---------------------------------------------------------------------------
// Lyapunov inequalities
// ---------------------------------------------------------------------------

/// beta [psi*(p/beta) - sigma(p/beta)]; +inf when psi*(p/beta) is.
inline ExtendedReal conjugate_gap_integrand(const PenaltyFunction& psi, const Vector& p, double beta) {
  const Vector q = p / beta;
  const ExtendedReal conj = psi.conjugate(q);
  const ExtendedReal sigma = psi.support(q);
  if (sigma.is_infinite()) return ExtendedReal::infinity();
  if (conj.is_infinite()) return ExtendedReal::infinity();
  return beta * (conj.value() - sigma.value());
}

struct InequalityCheck {
  std::string name;
  double max_violation = -std::numeric_limits<double>::infinity();  // max of lhs - rhs
  double t_at_max = 0.0;
  double tolerance = 0.0;
  bool evaluated = true;
  bool passed = true;

  void observe(double excess, double t) {
    if (excess > max_violation) {
      max_violation = excess;
      t_at_max = t;
    }
  }
  void finish() { passed = !evaluated || max_violation <= tolerance; }

  Json to_json() const {
    Json j = {{"name", name}, {"evaluated", evaluated}, {"passed", passed}, {"tolerance", tolerance}, {"t_at_max", t_at_max}};
    j["max_violation"] = evaluated && std::isfinite(max_violation) ? Json(max_violation) : Json(nullptr);
    return j;
  }
};

struct LyapunovReport {
  double k = 0.0;
  /// Largest estimated error of the finite-difference combination
  /// h'' + gamma h' + E'/gamma.
  double discretization_bound = 0.0;
  /// conjugate form <= Fenchel-Young form.
  InequalityCheck conjugate_step;
  /// Fenchel-Young form <= objective-gap form (convexity of phi).
  InequalityCheck convexity_step;
  /// h'' + gamma h' + E'/gamma + phi(x) - phi(z) + beta~ psi(x) <= 0.
  InequalityCheck chain_end;
  /// E' + gamma ||x'||^2 <= k beta psi(x).
  InequalityCheck energy_growth;
  std::optional<SolutionCertificate> certificate;

  bool passed() const {
    return conjugate_step.passed && convexity_step.passed && chain_end.passed && energy_growth.passed;
  }

  Json to_json() const {
    Json j = {{"k", k},
              {"discretization_bound", discretization_bound},
              {"conjugate_step", conjugate_step.to_json()},
              {"convexity_step", convexity_step.to_json()},
              {"chain_end", chain_end.to_json()},
              {"energy_growth", energy_growth.to_json()},
              {"passed", passed()}};
    j["certificate"] = certificate ? certificate->to_json() : Json(nullptr);
    return j;
  }
};

enum class Certification { required, skip };

/// Evaluates the Lyapunov inequality chain and the energy growth bound at
/// every interior sample. Each check passes iff its max violation is within
/// tolerance_factor times the discretization bound.
inline LyapunovReport lyapunov_inequality_check(const Trajectory& traj, const ProblemInstance& p, const Vector& z,
                                                double k, Certification cert = Certification::required,
                                                double tolerance_factor = 10.0) {
  require_dimension(p.dimension(), z, "lyapunov_inequality_check");
  const double gamma = p.gamma();
  if (!(k >= 0.0) || !(k < gamma)) throw std::invalid_argument("lyapunov_inequality_check: need 0 <= k < gamma");
  if (traj.size() < 5) throw std::invalid_argument("lyapunov_inequality_check: need at least 5 samples");

  LyapunovReport r;
  r.k = k;
  if (cert == Certification::required) {
    r.certificate = certify_solution(p, z);
    if (!r.certificate->passed) throw CertificationError("z not certified in S: " + r.certificate->failure);
  }

  const std::size_t n = traj.size();
  const std::vector<double> t = sample_times(traj);
  std::vector<double> h(n), E(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = traj.samples[i];
    h[i] = 0.5 * (s.x - z).squaredNorm();
    E[i] = energy_of(s);
  }
  const auto dh = numeric::differentiate(t, h, 1);
  const auto ddh = numeric::differentiate(t, h, 2);
  const auto dE = numeric::differentiate(t, E, 1);

  double bound_chain = 0.0;
  double bound_energy = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    bound_chain = std::max(bound_chain, ddh.error[i] + gamma * dh.error[i] + dE.error[i] / gamma);
    bound_energy = std::max(bound_energy, dE.error[i]);
  }
  constexpr double kFloor = 1e-12;
  bound_chain = std::max(bound_chain, kFloor);
  bound_energy = std::max(bound_energy, kFloor);
  r.discretization_bound = bound_chain;

  r.conjugate_step.name = "conjugate_step";
  r.convexity_step.name = "convexity_step";
  r.chain_end.name = "chain_end";
  r.energy_growth.name = "energy_growth";
  r.conjugate_step.tolerance = tolerance_factor * kFloor;
  r.convexity_step.tolerance = tolerance_factor * kFloor;
  r.chain_end.tolerance = tolerance_factor * bound_chain;
  r.energy_growth.tolerance = tolerance_factor * bound_energy;

  const Vector grad_z = p.phi().gradient(z);
  const double phi_z = p.phi().value(z);
  const Vector p_dir = -grad_z;
  const bool conj_available = p.psi().base().has_conjugate();
  if (!conj_available) r.conjugate_step.evaluated = false;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Sample& s = traj.samples[i];
    const double bt = (1.0 - k / gamma) * s.beta;
    const double d = ddh.value[i] + gamma * dh.value[i] + dE.value[i] / gamma;
    const double fy_form = d + bt * s.psi + grad_z.dot(s.x - z);
    const double gap_form = d + s.phi - phi_z + bt * s.psi;
    if (conj_available) {
      const ExtendedReal gap = conjugate_gap_integrand(p.psi(), p_dir, bt);
      // An infinite conjugate gap makes the conjugate form -inf: nothing to check.
      if (gap.is_finite()) {
        const double scale = 1.0 + std::abs(fy_form);
        r.conjugate_step.observe(((d - gap.value()) - fy_form) / scale, s.t);
      }
    }
    r.convexity_step.observe((fy_form - gap_form) / (1.0 + std::abs(gap_form)), s.t);
    r.chain_end.observe(gap_form, s.t);
    r.energy_growth.observe(dE.value[i] + gamma * s.v.squaredNorm() - k * s.beta * s.psi, s.t);
  }
  if (conj_available && !std::isfinite(r.conjugate_step.max_violation)) r.conjugate_step.evaluated = false;
  r.conjugate_step.finish();
  r.convexity_step.finish();
  r.chain_end.finish();
  r.energy_growth.finish();
  return r;
}

// ---------------------------------------------------------------------------
// Integrability condition on the conjugate gap
// ---------------------------------------------------------------------------

enum class HMode { closed_form, quadrature };
enum class HVerdict { finite, divergent, inconclusive };

inline const char* to_string(HMode m) { return m == HMode::closed_form ? "closed_form" : "quadrature"; }
inline const char* to_string(HVerdict v) {
  switch (v) {
    case HVerdict::finite: return "finite";
    case HVerdict::divergent: return "divergent";
    case HVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConditionHOptions {
  /// Half-width of the band around tail exponent -1 where no verdict is given.
  double dead_band = 0.05;
  /// Use the closed-form integrability analysis when one is known.
  bool allow_closed_form = true;
  /// Integrate with scale * beta(t); (1 - k/gamma) gives the beta~ variant.
  double beta_scale = 1.0;
  int tail_points = 64;
  int scan_points = 2000;
  double rel_tol = 1e-12;
};

struct ConditionHReport {
  Vector p;
  HMode mode = HMode::quadrature;
  double t_max = 0.0;
  double value = 0.0;  // quadrature of the integrand over [0, t_max]
  /// Slope of log(integrand) vs log(t) on [t_max/10, t_max]; -inf when the
  /// integrand vanishes there.
  double tail_exponent = 0.0;
  HVerdict verdict = HVerdict::inconclusive;
  /// Closed-form integral over [0, inf) when known and finite.
  std::optional<double> closed_form_total;
  /// First scanned time where the integrand is +inf.
  std::optional<double> infinite_at;
  double min_integrand = std::numeric_limits<double>::infinity();
  std::string note;

  Json to_json() const {
    Json j = {{"p", detail::to_json_vector(p)},
              {"mode", to_string(mode)},
              {"t_max", t_max},
              {"value", value},
              {"verdict", to_string(verdict)},
              {"note", note}};
    j["tail_exponent"] = std::isfinite(tail_exponent) ? Json(tail_exponent) : Json(nullptr);
    j["closed_form_total"] = closed_form_total ? Json(*closed_form_total) : Json(nullptr);
    j["infinite_at"] = infinite_at ? Json(*infinite_at) : Json(nullptr);
    j["min_integrand"] = std::isfinite(min_integrand) ? Json(min_integrand) : Json(nullptr);
    return j;
  }
};

namespace detail {

inline Vector json_to_vector(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

// Closed-form integrability when psi* - sigma is known along p/beta and the
// schedule family is registered: dist2 gives ||p||^2 / (2 beta(t)); the
// Huber hinge with p = lambda a gives delta lambda^2 / (2 beta(t)) while
// lambda <= beta(t).
struct ClosedFormH {
  bool finite;
  std::optional<double> total;
  std::string note;
};

inline std::optional<double> inverse_beta_integral(const PenaltySchedule& s, double scale) {
  switch (s.family()) {
    case ScheduleFamily::power:
      if (s.alpha() > 1.0) return 1.0 / (scale * (s.alpha() - 1.0));
      return std::nullopt;
    case ScheduleFamily::exponential:
      if (s.rate() > 0.0) return 1.0 / (scale * s.beta0() * s.rate());
      return std::nullopt;
    default: return std::nullopt;
  }
}

inline std::optional<ClosedFormH> closed_form_h(const PenaltyFunction& psi, const PenaltySchedule& s,
                                                const Vector& p, double scale) {
  if (p.isZero(0.0)) return ClosedFormH{true, 0.0, "p = 0: integrand vanishes"};
  if (s.family() == ScheduleFamily::custom) return std::nullopt;
  const std::string& kind = psi.base().kind();
  double weight = 0.0;
  if (kind == "dist2") {
    weight = 0.5 * p.squaredNorm();
  } else if (kind == "huber_hinge") {
    const Vector a = json_to_vector(psi.base().descriptor()["normal"]);
    const double lambda = a.dot(p) / a.squaredNorm();
    if (lambda > scale * s.beta(0.0)) return std::nullopt;  // infinite near t = 0; leave to the scan
    weight = 0.5 * psi.base().descriptor()["delta"].get<double>() * lambda * lambda;
  } else {
    return std::nullopt;
  }
  if (s.family() == ScheduleFamily::constant) return ClosedFormH{false, std::nullopt, "constant beta: integral of 1/beta diverges"};
  const auto inv = inverse_beta_integral(s, scale);
  if (!inv) return ClosedFormH{false, std::nullopt, "integral of 1/beta diverges"};
  return ClosedFormH{true, weight * *inv, "integrand = c / beta(t) with finite integral of 1/beta"};
}

}  // namespace detail

/// Checks integrability of t -> beta(t) [psi*(p/beta(t)) - sigma(p/beta(t))]
/// over [0, inf): quadrature on [0, t_max], a log-log tail fit on
/// [t_max/10, t_max], and the closed-form analysis where one is known.
/// p must lie in the range of the normal cone of argmin psi.
inline ConditionHReport condition_h_check(const PenaltyFunction& psi, const PenaltySchedule& s, const Vector& p,
                                          double t_max, const ConditionHOptions& opt = {}) {
  require_dimension(psi.dimension(), p, "condition_h_check");
  if (!(t_max > 0.0)) throw std::invalid_argument("condition_h_check: t_max must be positive");
  if (!(opt.beta_scale > 0.0)) throw std::invalid_argument("condition_h_check: beta_scale must be positive");
  if (!psi.base().has_conjugate()) {
    throw ConjugateUnavailable("condition_h_check: no closed-form conjugate for '" + psi.base().kind() + "'");
  }
  const auto witness = psi.zero_set().support_point(p);
  if (!witness || !psi.zero_set().in_normal_cone(*witness, p)) {
    throw std::invalid_argument("condition_h_check: p is not in the range of the normal cone of argmin psi");
  }

  ConditionHReport r;
  r.p = p;
  r.t_max = t_max;
  auto beta = [&](double t) { return opt.beta_scale * s.beta(t); };
  auto integrand = [&](double t) { return conjugate_gap_integrand(psi, p, beta(t)); };

  // Scan for +inf (and record the minimum, which must stay >= 0).
  const double log_span = std::log1p(t_max);
  for (int i = 0; i < opt.scan_points; ++i) {
    const double t = std::expm1(log_span * i / (opt.scan_points - 1));
    const ExtendedReal g = integrand(t);
    if (g.is_infinite()) {
      r.infinite_at = t;
      r.verdict = HVerdict::divergent;
      r.value = std::numeric_limits<double>::infinity();
      r.tail_exponent = std::numeric_limits<double>::quiet_NaN();
      r.note = "integrand is +inf at t=" + format_double(t);
      return r;
    }
    r.min_integrand = std::min(r.min_integrand, g.value());
  }

  auto finite_integrand = [&](double t) {
    const double g = integrand(t).value();
    r.min_integrand = std::min(r.min_integrand, g);
    return g;
  };

  // Quadrature on log-spaced panels [0,1], [1,10], [10,100], ...
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double a = 0.0;
  double b = std::min(1.0, t_max);
  r.value = 0.0;
  while (a < t_max) {
    r.value += Quad::integrate(finite_integrand, a, b, 15, opt.rel_tol);
    a = b;
    b = std::min(b * 10.0, t_max);
  }

  // Tail exponent by least squares on log-spaced points.
  const double t_lo = t_max / 10.0;
  int zeros = 0;
  std::vector<double> lx, ly;
  for (int i = 0; i < opt.tail_points; ++i) {
    const double t = t_lo * std::pow(10.0, static_cast<double>(i) / (opt.tail_points - 1));
    const double g = finite_integrand(t);
    if (g <= 0.0) {
      ++zeros;
      continue;
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(g));
  }
  HVerdict tail_verdict = HVerdict::inconclusive;
  if (zeros == opt.tail_points) {
    r.tail_exponent = -std::numeric_limits<double>::infinity();
    tail_verdict = HVerdict::finite;
    r.note = "integrand vanishes on the tail";
  } else if (zeros > 0 || lx.size() < 2) {
    r.tail_exponent = std::numeric_limits<double>::quiet_NaN();
    r.note = "integrand changes support on the tail";
  } else {
    const double m = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    r.tail_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (r.tail_exponent < -1.0 - opt.dead_band) tail_verdict = HVerdict::finite;
    else if (r.tail_exponent > -1.0 + opt.dead_band) tail_verdict = HVerdict::divergent;
  }

  r.mode = HMode::quadrature;
  r.verdict = tail_verdict;
  if (opt.allow_closed_form) {
    if (const auto cf = detail::closed_form_h(psi, s, p, opt.beta_scale)) {
      r.mode = HMode::closed_form;
      r.verdict = cf->finite ? HVerdict::finite : HVerdict::divergent;
      r.closed_form_total = cf->total;
      r.note = cf->note;
    }
  }
  if (r.mode == HMode::quadrature && r.note.empty()) {
    r.note = "tail fit on [" + format_double(t_lo) + ", " + format_double(t_max) + "], dead band " +
             format_double(opt.dead_band);
  }
  return r;
}

/// Integrand dump (t, integrand) on a log-spaced grid, for plotting.
inline void write_condition_h_csv(std::ostream& os, const PenaltyFunction& psi, const PenaltySchedule& s,
                                  const Vector& p, double t_max, int points = 400, double beta_scale = 1.0) {
  os << "t,integrand\n";
  const double log_span = std::log1p(t_max);
  for (int i = 0; i < points; ++i) {
    const double t = std::expm1(log_span * i / (points - 1));
    const ExtendedReal g = conjugate_gap_integrand(psi, p, beta_scale * s.beta(t));
    os << format_double(t) << ',' << (g.is_finite() ? format_double(g.value()) : std::string("inf")) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Quasi-Fejer limit monitor
// ---------------------------------------------------------------------------

enum class FejerOrder { first, second };
enum class FejerVerdict { limit_plausible, violated, inconclusive };

inline const char* to_string(FejerVerdict v) {
  switch (v) {
    case FejerVerdict::limit_plausible: return "limit_plausible";
    case FejerVerdict::violated: return "violated";
    case FejerVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct FejerOptions {
  double tail_oscillation_eps = 1e-2;
  double cauchy_ratio = 0.05;
  double tolerance_factor = 10.0;
  double tolerance_floor = 1e-10;
};

struct FejerReport {
  FejerVerdict verdict = FejerVerdict::inconclusive;
  double max_violation = 0.0;  // max of (F' or F'' + gamma F') - G
  double t_at_max = 0.0;
  double tolerance = 0.0;
  double g_tail_ratio = 0.0;
  double g_integral = 0.0;
  double tail_oscillation = 0.0;
  double limit_estimate = 0.0;
  bool inequality_ok = false;
  bool integrable_ok = false;
  bool oscillation_ok = false;

  Json to_json() const {
    return {{"verdict", to_string(verdict)}, {"max_violation", max_violation}, {"t_at_max", t_at_max},
            {"tolerance", tolerance},        {"g_tail_ratio", g_tail_ratio},   {"g_integral", g_integral},
            {"tail_oscillation", tail_oscillation}, {"limit_estimate", limit_estimate}};
  }
};

/// Numerical counterpart of: F bounded below, F' <= G (or F'' + gamma F' <= G)
/// with G integrable => lim F exists. Checks the inequality within the
/// finite-difference error, Cauchy behaviour of the running integral of G, and
/// the oscillation of F over the last 10% of the time span.
inline FejerReport quasi_fejer_monitor(std::span<const double> t, std::span<const double> F,
                                       std::span<const double> G, FejerOrder order, double gamma,
                                       const FejerOptions& opt = {}) {
  if (t.size() != F.size() || t.size() != G.size()) throw std::invalid_argument("quasi_fejer_monitor: grid mismatch");
  if (t.size() < 5) throw std::invalid_argument("quasi_fejer_monitor: need at least 5 samples");
  if (order == FejerOrder::second && !(gamma > 0.0)) throw std::invalid_argument("quasi_fejer_monitor: gamma must be > 0");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("quasi_fejer_monitor: times must increase");
  }

  FejerReport r;
  const auto d1 = numeric::differentiate(t, F, 1);
  const auto d2 = numeric::differentiate(t, F, 2);
  double bound = 0.0;
  r.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    double lhs = d1.value[i];
    double err = d1.error[i];
    if (order == FejerOrder::second) {
      lhs = d2.value[i] + gamma * d1.value[i];
      err = d2.error[i] + gamma * d1.error[i];
    }
    bound = std::max(bound, err);
    if (lhs - G[i] > r.max_violation) {
      r.max_violation = lhs - G[i];
      r.t_at_max = t[i];
    }
  }
  r.tolerance = opt.tolerance_factor * std::max(bound, opt.tolerance_floor);
  r.inequality_ok = r.max_violation <= r.tolerance;

  const auto IG = numeric::cumulative_trapezoid(t, G);
  r.g_integral = IG.back();
  r.g_tail_ratio = numeric::tail_ratio(t, IG);
  r.integrable_ok = r.g_tail_ratio <= opt.cauchy_ratio;

  const double t_tail = t.back() - 0.1 * (t.back() - t.front());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = numeric::index_at_or_after(t, t_tail); i < t.size(); ++i) {
    lo = std::min(lo, F[i]);
    hi = std::max(hi, F[i]);
  }
  r.tail_oscillation = hi - lo;
  r.oscillation_ok = r.tail_oscillation <= opt.tail_oscillation_eps;
  r.limit_estimate = F.back();

  if (!r.inequality_ok) r.verdict = FejerVerdict::violated;
  else if (r.integrable_ok && r.oscillation_ok) r.verdict = FejerVerdict::limit_plausible;
  else r.verdict = FejerVerdict::inconclusive;
  return r;
}

// ---------------------------------------------------------------------------
// Convergence report
// ---------------------------------------------------------------------------

struct ConvergenceOptions {
  /// Growth constant for beta~ = (1 - k/gamma) beta in the signed integral.
  double k = 0.0;
  double terminal_eps = 1e-2;
  double distance_eps = 5e-2;
  double cauchy_ratio = 0.05;
};

struct ConvergenceReport {
  Vector z;
  double t_end = 0.0;
  // Terminal values.
  double phi_gap_terminal = 0.0;    // phi(x(T)) - phi(z)
  double beta_psi_terminal = 0.0;   // beta(T) psi(x(T))
  double psi_terminal = 0.0;
  double velocity_terminal = 0.0;   // ||x'(T)||
  double distance_terminal = 0.0;   // ||x(T) - z||
  double energy_terminal = 0.0;
  // Partial integrals over [0, T] and last-half / total ratios.
  double integral_beta_psi = 0.0;
  double integral_beta_psi_tail_ratio = 0.0;
  double integral_velocity_sq = 0.0;
  double integral_velocity_sq_tail_ratio = 0.0;
  double integral_distance_sq = 0.0;
  double integral_distance_sq_tail_ratio = 0.0;
  // Signed integrals (limits claimed to exist; Cauchy-tail plausibility only).
  double integral_linearized_gap = 0.0;  // int <grad phi(z), x - z>
  double integral_linearized_gap_tail_ratio = 0.0;
  double integral_penalized_gap = 0.0;   // int phi(x) - phi(z) + beta~ psi(x)
  double integral_penalized_gap_tail_ratio = 0.0;
  // Limit-existence verdicts.
  bool distance_decreasing_last_decade = false;
  bool distance_limit_plausible = false;
  bool energy_gap_decreasing_last_decade = false;
  bool energy_limit_plausible = false;

  Json to_json() const {
    auto plaus = [](bool b) { return b ? "plausible" : "not_established"; };
    return {{"z", detail::to_json_vector(z)},
            {"t_end", t_end},
            {"phi_gap_terminal", phi_gap_terminal},
            {"beta_psi_terminal", beta_psi_terminal},
            {"psi_terminal", psi_terminal},
            {"velocity_terminal", velocity_terminal},
            {"distance_terminal", distance_terminal},
            {"energy_terminal", energy_terminal},
            {"integral_beta_psi", integral_beta_psi},
            {"integral_beta_psi_tail_ratio", integral_beta_psi_tail_ratio},
            {"integral_velocity_sq", integral_velocity_sq},
            {"integral_velocity_sq_tail_ratio", integral_velocity_sq_tail_ratio},
            {"integral_distance_sq", integral_distance_sq},
            {"integral_distance_sq_tail_ratio", integral_distance_sq_tail_ratio},
            {"integral_linearized_gap", integral_linearized_gap},
            {"integral_linearized_gap_tail_ratio", integral_linearized_gap_tail_ratio},
            {"integral_penalized_gap", integral_penalized_gap},
            {"integral_penalized_gap_tail_ratio", integral_penalized_gap_tail_ratio},
            {"distance_decreasing_last_decade", distance_decreasing_last_decade},
            {"distance_limit", plaus(distance_limit_plausible)},
            {"energy_gap_decreasing_last_decade", energy_gap_decreasing_last_decade},
            {"energy_limit", plaus(energy_limit_plausible)}};
  }
};

/// Terminal values, partial integrals (trapezoid on the output grid) and
/// tail criteria: a limit is "plausible" when the terminal value is within
/// tolerance and the quantity is nonincreasing over [T/10, T].
inline ConvergenceReport convergence_report(const Trajectory& traj, const ProblemInstance& p, const Vector& z,
                                            const ConvergenceOptions& opt = {}) {
  require_dimension(p.dimension(), z, "convergence_report");
  if (traj.size() < 2) throw std::invalid_argument("convergence_report: need at least 2 samples");
  if (!(opt.k >= 0.0) || !(opt.k < p.gamma())) throw std::invalid_argument("convergence_report: need 0 <= k < gamma");

  const std::size_t n = traj.size();
  const std::vector<double> t = sample_times(traj);
  const Vector grad_z = p.phi().gradient(z);
  const double phi_z = p.phi().value(z);
  const double tilde = 1.0 - opt.k / p.gamma();

  std::vector<double> beta_psi(n), vel_sq(n), dist_sq(n), dist(n), lin_gap(n), pen_gap(n), energy_gap(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = traj.samples[i];
    beta_psi[i] = s.beta * s.psi;
    vel_sq[i] = s.v.squaredNorm();
    dist_sq[i] = (s.x - z).squaredNorm();
    dist[i] = std::sqrt(dist_sq[i]);
    lin_gap[i] = grad_z.dot(s.x - z);
    pen_gap[i] = s.phi - phi_z + tilde * s.beta * s.psi;
    energy_gap[i] = std::abs(energy_of(s) - phi_z);
  }

  ConvergenceReport r;
  r.z = z;
  r.t_end = t.back();
  const Sample& last = traj.back();
  r.phi_gap_terminal = last.phi - phi_z;
  r.beta_psi_terminal = last.beta * last.psi;
  r.psi_terminal = last.psi;
  r.velocity_terminal = last.v.norm();
  r.distance_terminal = dist.back();
  r.energy_terminal = energy_of(last);

  const auto i_bp = numeric::cumulative_trapezoid(t, beta_psi);
  const auto i_v = numeric::cumulative_trapezoid(t, vel_sq);
  const auto i_d = numeric::cumulative_trapezoid(t, dist_sq);
  const auto i_lin = numeric::cumulative_trapezoid(t, lin_gap);
  const auto i_pen = numeric::cumulative_trapezoid(t, pen_gap);
  r.integral_beta_psi = i_bp.back();
  r.integral_beta_psi_tail_ratio = numeric::tail_ratio(t, i_bp);
  r.integral_velocity_sq = i_v.back();
  r.integral_velocity_sq_tail_ratio = numeric::tail_ratio(t, i_v);
  r.integral_distance_sq = i_d.back();
  r.integral_distance_sq_tail_ratio = numeric::tail_ratio(t, i_d);
  r.integral_linearized_gap = i_lin.back();
  r.integral_linearized_gap_tail_ratio = numeric::signed_tail_ratio(t, i_lin);
  r.integral_penalized_gap = i_pen.back();
  r.integral_penalized_gap_tail_ratio = numeric::signed_tail_ratio(t, i_pen);

  const double decade = t.back() / 10.0;
  r.distance_decreasing_last_decade = numeric::nonincreasing_from(t, dist, decade);
  r.distance_limit_plausible = r.distance_terminal <= opt.distance_eps && r.distance_decreasing_last_decade;
  r.energy_gap_decreasing_last_decade = numeric::decreasing_trend_from(t, energy_gap, decade);
  r.energy_limit_plausible = energy_gap.back() <= opt.terminal_eps && r.energy_gap_decreasing_last_decade;
  return r;
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_DIAGNOSTICS_HPP
