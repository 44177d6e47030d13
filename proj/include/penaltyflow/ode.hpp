#ifndef PENALTYFLOW_ODE_HPP
#define PENALTYFLOW_ODE_HPP

// Explicit Runge-Kutta integrators for y' = f(t, y) on [0, T] with output on a
// fixed grid: adaptive Dormand-Prince 5(4) (FSAL, error per step in a mixed
// rel/abs RMS norm) and classical fixed-step RK4. Dense output between
// accepted steps is the cubic Hermite interpolant through (y, f) at both ends.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace penaltyflow::ode {

using Vector = Eigen::VectorXd;
using Rhs = std::function<Vector(double, const Vector&)>;
/// Called once per output time, in increasing order.
using Observer = std::function<void(double, const Vector&)>;

enum class Status { completed, step_underflow, non_finite, rhs_error };

struct Stats {
  long steps = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  /// Largest normalized error estimate among accepted steps (<= 1).
  double max_error_estimate = 0.0;
  double min_accepted_step = 0.0;
  Status status = Status::completed;
  std::string diagnostic;
};

struct AdaptiveOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  double initial_step = 1e-3;
  /// Abort when the step drops below underflow_fraction * T.
  double underflow_fraction = 1e-12;
};

namespace detail {

inline Vector hermite(double theta, double h, const Vector& y0, const Vector& f0, const Vector& y1,
                      const Vector& f1) {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + theta;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

// Emits every grid time in (t0, t1] (and t0 itself for the first sample).
class GridEmitter {
 public:
  GridEmitter(std::span<const double> grid, const Observer& observer) : grid_(grid), observer_(observer) {}

  void emit_exact(double t, const Vector& y) {
    while (next_ < grid_.size() && grid_[next_] <= t) {
      observer_(grid_[next_], y);
      ++next_;
    }
  }

  void emit_interval(double t0, double t1, const Vector& y0, const Vector& f0, const Vector& y1,
                     const Vector& f1) {
    const double h = t1 - t0;
    while (next_ < grid_.size() && grid_[next_] <= t1) {
      const double tg = grid_[next_];
      observer_(tg, tg == t1 ? y1 : hermite((tg - t0) / h, h, y0, f0, y1, f1));
      ++next_;
    }
  }

 private:
  std::span<const double> grid_;
  const Observer& observer_;
  std::size_t next_ = 0;
};

inline bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail

/// Dormand-Prince 5(4). grid must be increasing with grid.front() == 0 and
/// grid.back() == T.
inline Stats integrate_dopri45(const Rhs& f, Vector y, std::span<const double> grid, const AdaptiveOptions& opt,
                               const Observer& observer) {
  // Butcher tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat (embedded 4th-order weights).
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats st;
  if (grid.size() < 2 || grid.front() != 0.0) throw std::invalid_argument("integrate_dopri45: bad output grid");
  const double T = grid.back();
  detail::GridEmitter emit(grid, observer);

  double t = 0.0;
  Vector k1 = f(t, y);
  ++st.rhs_evaluations;
  if (!detail::finite(k1)) {
    st.status = Status::non_finite;
    st.diagnostic = "non-finite derivative at t=0";
    emit.emit_exact(0.0, y);
    return st;
  }
  emit.emit_exact(0.0, y);

  double h = std::min({opt.initial_step, opt.max_step, T});
  st.min_accepted_step = std::numeric_limits<double>::infinity();
  const double h_floor = opt.underflow_fraction * T;
  int non_finite_streak = 0;

  while (t < T) {
    bool last = false;
    if (t + h >= T) {
      h = T - t;
      last = true;
    }
    const Vector k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Vector k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vector k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = f(t + h, y_new);
    st.rhs_evaluations += 6;

    const Vector err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    bool ok = detail::finite(y_new) && detail::finite(k7) && detail::finite(err_vec);
    if (ok) {
      const Eigen::ArrayXd scale = opt.abs_tol + opt.rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array();
      err = std::sqrt((err_vec.array() / scale).square().mean());
    } else {
      err = std::numeric_limits<double>::infinity();
    }

    if (err <= 1.0) {
      const double t_new = last ? T : t + h;
      emit.emit_interval(t, t_new, y, k1, y_new, k7);
      ++st.steps;
      st.max_error_estimate = std::max(st.max_error_estimate, err);
      st.min_accepted_step = std::min(st.min_accepted_step, h);
      t = t_new;
      y = std::move(y_new);
      k1 = k7;
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = std::min(h * fac, opt.max_step);
    } else {
      ++st.rejected;
      const double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2;
      h *= fac;
    }
    if (t < T && h < h_floor) {
      st.status = Status::step_underflow;
      st.diagnostic = "step size " + std::to_string(h) + " below " + std::to_string(h_floor) + " at t=" +
                      std::to_string(t) + " (stiffness)";
      return st;
    }
    non_finite_streak = ok ? 0 : non_finite_streak + 1;
    if (non_finite_streak >= 40) {
      st.status = Status::non_finite;
      st.diagnostic = "non-finite state near t=" + std::to_string(t);
      return st;
    }
  }
  return st;
}

/// Classical RK4 with n = ceil(T / step) equal steps.
inline Stats integrate_rk4(const Rhs& f, Vector y, std::span<const double> grid, double step,
                           const Observer& observer) {
  Stats st;
  if (grid.size() < 2 || grid.front() != 0.0) throw std::invalid_argument("integrate_rk4: bad output grid");
  if (!(step > 0.0)) throw std::invalid_argument("integrate_rk4: step must be positive");
  const double T = grid.back();
  const long n = std::max(1L, static_cast<long>(std::ceil(T / step - 1e-9)));
  const double h = T / static_cast<double>(n);
  detail::GridEmitter emit(grid, observer);
  emit.emit_exact(0.0, y);
  Vector k1 = f(0.0, y);
  ++st.rhs_evaluations;
  st.min_accepted_step = h;
  for (long i = 0; i < n; ++i) {
    const double t = h * static_cast<double>(i);
    const Vector k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    const Vector k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    const Vector k4 = f(t + h, y + h * k3);
    Vector y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const bool last = i + 1 == n;
    const Vector k_end = f(last ? T : t + h, y_new);
    st.rhs_evaluations += 4;
    if (!detail::finite(y_new) || !detail::finite(k_end)) {
      st.status = Status::non_finite;
      st.diagnostic = "non-finite state at t=" + std::to_string(t + h);
      return st;
    }
    emit.emit_interval(t, last ? T : t + h, y, k1, y_new, k_end);
    ++st.steps;
    y = std::move(y_new);
    k1 = k_end;
  }
  return st;
}

}  // namespace penaltyflow::ode

#endif  // PENALTYFLOW_ODE_HPP
