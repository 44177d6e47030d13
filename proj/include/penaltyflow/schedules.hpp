#ifndef PENALTYFLOW_SCHEDULES_HPP
#define PENALTYFLOW_SCHEDULES_HPP

// Penalty schedules beta(t) and the growth condition 0 <= beta' <= k beta,
// k < gamma, optionally required only from some t0 on.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "penaltyflow/convex_json.hpp"

namespace penaltyflow {

enum class ScheduleFamily { power, exponential, constant, custom };

inline const char* to_string(ScheduleFamily f) {
  switch (f) {
    case ScheduleFamily::power: return "power";
    case ScheduleFamily::exponential: return "exp";
    case ScheduleFamily::constant: return "const";
    case ScheduleFamily::custom: return "custom";
  }
  return "?";
}

/// beta : [0, inf) -> (0, inf) of class C^1, with its derivative.
class PenaltySchedule {
 public:
  using Fn = std::function<double(double)>;

  /// (1 + t)^alpha.
  static PenaltySchedule power(double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("power schedule: alpha must be >= 0");
    PenaltySchedule s;
    s.family_ = ScheduleFamily::power;
    s.alpha_ = alpha;
    s.beta_ = [alpha](double t) { return std::pow(1.0 + t, alpha); };
    s.beta_dot_ = [alpha](double t) { return alpha == 0.0 ? 0.0 : alpha * std::pow(1.0 + t, alpha - 1.0); };
    s.divergent_ = alpha > 0.0;
    return s;
  }

  /// beta0 exp(k t).
  static PenaltySchedule exponential(double beta0, double k) {
    if (!(beta0 > 0.0) || !(k >= 0.0)) throw std::invalid_argument("exp schedule: need beta0 > 0, k >= 0");
    PenaltySchedule s;
    s.family_ = ScheduleFamily::exponential;
    s.beta0_ = beta0;
    s.rate_ = k;
    s.beta_ = [beta0, k](double t) { return beta0 * std::exp(k * t); };
    s.beta_dot_ = [beta0, k](double t) { return k * beta0 * std::exp(k * t); };
    s.divergent_ = k > 0.0;
    return s;
  }

  static PenaltySchedule constant(double beta0) {
    if (!(beta0 > 0.0)) throw std::invalid_argument("const schedule: beta0 must be > 0");
    PenaltySchedule s;
    s.family_ = ScheduleFamily::constant;
    s.beta0_ = beta0;
    s.beta_ = [beta0](double) { return beta0; };
    s.beta_dot_ = [](double) { return 0.0; };
    return s;
  }

  /// User-supplied schedule with a claimed growth constant; only ever
  /// grid-checked.
  static PenaltySchedule custom(Fn beta, Fn beta_dot, double claimed_k, bool divergent) {
    PenaltySchedule s;
    s.family_ = ScheduleFamily::custom;
    s.beta_ = std::move(beta);
    s.beta_dot_ = std::move(beta_dot);
    s.rate_ = claimed_k;
    s.divergent_ = divergent;
    return s;
  }

  double beta(double t) const { return beta_(t); }
  double beta_dot(double t) const { return beta_dot_(t); }
  ScheduleFamily family() const { return family_; }
  bool divergent() const { return divergent_; }
  double alpha() const { return alpha_; }
  double beta0() const { return beta0_; }
  /// exp family: k; custom: the claimed growth constant.
  double rate() const { return rate_; }

  /// sup_{t >= t0} beta'/beta in closed form; nullopt for custom schedules.
  std::optional<double> analytic_growth_constant(double t0) const {
    switch (family_) {
      case ScheduleFamily::power: return alpha_ / (1.0 + t0);
      case ScheduleFamily::exponential: return rate_;
      case ScheduleFamily::constant: return 0.0;
      case ScheduleFamily::custom: return std::nullopt;
    }
    return std::nullopt;
  }

  Json to_json() const {
    switch (family_) {
      case ScheduleFamily::power: return {{"family", "power"}, {"alpha", alpha_}};
      case ScheduleFamily::exponential: return {{"family", "exp"}, {"beta0", beta0_}, {"k", rate_}};
      case ScheduleFamily::constant: return {{"family", "const"}, {"beta0", beta0_}};
      case ScheduleFamily::custom: return {{"family", "custom"}, {"claimed_k", rate_}};
    }
    return {};
  }

 private:
  PenaltySchedule() = default;

  ScheduleFamily family_ = ScheduleFamily::constant;
  double alpha_ = 0.0;
  double beta0_ = 1.0;
  double rate_ = 0.0;
  bool divergent_ = false;
  Fn beta_;
  Fn beta_dot_;
};

/// {"family":"power","alpha":a} | {"family":"exp","beta0":b,"k":k} | {"family":"const","beta0":b}
inline PenaltySchedule schedule_from_json(const Json& j, const std::string& where = "schedule") {
  using namespace detail;
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
    throw ConfigError(where + ": missing string field 'family'");
  }
  const std::string family = j["family"].get<std::string>();
  return build(where, [&]() {
    if (family == "power") {
      require_keys(j, where, {"family", "alpha"});
      return PenaltySchedule::power(json_number(j["alpha"], where + ".alpha"));
    }
    if (family == "exp") {
      require_keys(j, where, {"family", "beta0", "k"});
      return PenaltySchedule::exponential(json_number(j["beta0"], where + ".beta0"), json_number(j["k"], where + ".k"));
    }
    if (family == "const") {
      require_keys(j, where, {"family", "beta0"});
      return PenaltySchedule::constant(json_number(j["beta0"], where + ".beta0"));
    }
    throw ConfigError(where + ": unknown schedule family '" + family + "'");
  });
}

/// (1 - k/gamma) beta(t).
inline double beta_tilde(const PenaltySchedule& s, double k, double gamma, double t) {
  if (!(gamma > 0.0)) throw std::invalid_argument("beta_tilde: gamma must be positive");
  if (!(k >= 0.0) || !(k < gamma)) throw std::invalid_argument("beta_tilde: need 0 <= k < gamma");
  if (!(t >= 0.0)) throw std::invalid_argument("beta_tilde: t must be >= 0");
  return (1.0 - k / gamma) * s.beta(t);
}

/// Sampling grid for the growth cross-check.
struct TimeGrid {
  double t_end = 1e3;
  int points = 2001;
};

enum class GrowthEvidence { proved, grid_checked };

struct GrowthReport {
  bool feasible = false;
  double k_min = 0.0;
  double t0 = 0.0;
  double gamma = 0.0;
  double margin = 0.0;
  GrowthEvidence evidence = GrowthEvidence::proved;
  bool divergent = false;
  /// Largest beta'/beta seen on the grid (cross-check of k_min).
  double grid_sup_ratio = 0.0;
  /// Empty when feasible.
  std::string reason;

  Json to_json() const {
    return {{"feasible", feasible},
            {"k_min", k_min},
            {"t0", t0},
            {"gamma", gamma},
            {"margin", margin},
            {"evidence", evidence == GrowthEvidence::proved ? "proved" : "grid-checked"},
            {"divergent", divergent},
            {"grid_sup_ratio", grid_sup_ratio},
            {"reason", reason}};
  }
};

/// Checks 0 <= beta' <= k beta on [t0, inf) for some k < gamma. For the
/// registered families k_min is exact; the grid only cross-checks it (a grid
/// sup would under-estimate). Log-spaced grid on [t0, t0 + t_end].
inline GrowthReport verify_growth(const PenaltySchedule& s, double gamma, double t0 = 0.0, TimeGrid grid = {}) {
  if (!(gamma > 0.0)) throw std::invalid_argument("verify_growth: gamma must be positive");
  if (!(t0 >= 0.0)) throw std::invalid_argument("verify_growth: t0 must be >= 0");
  if (grid.points < 2 || !(grid.t_end > 0.0)) throw std::invalid_argument("verify_growth: bad grid");

  GrowthReport r;
  r.t0 = t0;
  r.gamma = gamma;
  r.divergent = s.divergent();

  bool nonincreasing = false;
  double first_negative = 0.0;
  double sup_ratio = 0.0;
  const double span = std::log1p(grid.t_end);
  for (int i = 0; i < grid.points; ++i) {
    const double t = t0 + std::expm1(span * i / (grid.points - 1));
    const double b = s.beta(t);
    const double bd = s.beta_dot(t);
    if (b == std::numeric_limits<double>::infinity()) break;  // overflow ends the scan
    if (!(b > 0.0) || std::isnan(bd)) {
      r.reason = "schedule not positive/finite at t=" + std::to_string(t);
      return r;
    }
    if (bd < -1e-12 && !nonincreasing) {
      nonincreasing = true;
      first_negative = t;
    }
    sup_ratio = std::max(sup_ratio, bd / b);
  }
  r.grid_sup_ratio = sup_ratio;

  if (const auto k = s.analytic_growth_constant(t0)) {
    r.k_min = *k;
    r.evidence = GrowthEvidence::proved;
  } else {
    r.evidence = GrowthEvidence::grid_checked;
    r.k_min = s.rate();
    if (sup_ratio > s.rate() * (1.0 + 1e-9) + 1e-12) {
      r.k_min = sup_ratio;
      r.margin = gamma - r.k_min;
      r.reason = "claimed k=" + std::to_string(s.rate()) + " below observed beta'/beta=" + std::to_string(sup_ratio);
      return r;
    }
  }
  r.margin = gamma - r.k_min;

  if (nonincreasing) {
    r.reason = "nonincreasing schedule (beta' < 0 at t=" + std::to_string(first_negative) + ")";
    return r;
  }
  if (!(r.k_min < gamma)) {
    std::ostringstream os;
    os << "H_beta violated: k_min=" << r.k_min << " \xE2\x89\xA5 gamma=" << gamma;
    r.reason = os.str();
    return r;
  }
  r.feasible = true;
  return r;
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_SCHEDULES_HPP
