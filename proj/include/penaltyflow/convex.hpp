#ifndef PENALTYFLOW_CONVEX_HPP
#define PENALTYFLOW_CONVEX_HPP

// Smooth convex functions and closed convex sets on R^n: values, gradients,
// Fenchel conjugates, support functions and projections.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"
#include "penaltyflow/extended_real.hpp"

namespace penaltyflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Json = nlohmann::json;

/// Membership tolerance: x is in C when ||x - P_C(x)|| <= this.
inline constexpr double kMembershipTol = 1e-8;

/// Relative tolerance used to decide whether a direction lies in the
/// (polyhedral) barrier cone of a set, i.e. whether sigma_C(p) is finite.
inline constexpr double kConeTol = 1e-10;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConjugateUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dimension(Eigen::Index expected, const Vector& x, const char* where) {
  if (x.size() != expected) {
    throw DimensionError(std::string(where) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(x.size()));
  }
}

// ---------------------------------------------------------------------------
// ClosedConvexSet
// ---------------------------------------------------------------------------

class ClosedConvexSet {
 public:
  using ProjectFn = std::function<Vector(const Vector&)>;
  using SupportFn = std::function<ExtendedReal(const Vector&)>;
  /// Maximizer of <p, .> over the set when the supremum is attained.
  using SupportPointFn = std::function<std::optional<Vector>(const Vector&)>;

  ClosedConvexSet(Eigen::Index dimension, std::string kind, ProjectFn project, SupportFn support,
                  SupportPointFn support_point = {}, Json descriptor = Json::object())
      : data_(std::make_shared<const Data>(Data{dimension, std::move(kind), std::move(project),
                                                std::move(support), std::move(support_point),
                                                std::move(descriptor)})) {
    if (dimension <= 0) throw std::invalid_argument("ClosedConvexSet: dimension must be positive");
  }

  Eigen::Index dimension() const { return data_->dimension; }
  const std::string& kind() const { return data_->kind; }
  const Json& descriptor() const { return data_->descriptor; }

  Vector project(const Vector& x) const {
    require_dimension(dimension(), x, "project");
    return data_->project(x);
  }

  ExtendedReal support(const Vector& p) const {
    require_dimension(dimension(), p, "support");
    return data_->support(p);
  }

  double distance(const Vector& x) const { return (x - project(x)).norm(); }

  bool contains(const Vector& x, double tol = kMembershipTol) const { return distance(x) <= tol; }

  /// A point x of the set with <p, x> = sigma(p), i.e. p in N(x). Empty when
  /// sigma(p) = +inf.
  std::optional<Vector> support_point(const Vector& p) const {
    require_dimension(dimension(), p, "support_point");
    if (support(p).is_infinite()) return std::nullopt;
    if (data_->support_point) return data_->support_point(p);
    // Generic fallback: project a far point along p.
    const double np = p.norm();
    if (np == 0.0) return project(Vector::Zero(dimension()));
    return project(project(Vector::Zero(dimension())) + (1e8 / np) * p);
  }

  /// p in N(x) iff x in the set and sigma(p) = <p, x>.
  bool in_normal_cone(const Vector& x, const Vector& p, double tol = 1e-8) const {
    if (!contains(x)) return false;
    const ExtendedReal s = support(p);
    if (s.is_infinite()) return false;
    return std::abs(s.value() - p.dot(x)) <= tol * std::max(1.0, std::abs(s.value()));
  }

 private:
  struct Data {
    Eigen::Index dimension;
    std::string kind;
    ProjectFn project;
    SupportFn support;
    SupportPointFn support_point;
    Json descriptor;
  };
  std::shared_ptr<const Data> data_;
};

namespace detail {

inline Json to_json_vector(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json_matrix(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json_vector(m.row(i).transpose()));
  return rows;
}

}  // namespace detail

/// {x : A x = b}; A must have full row rank.
inline ClosedConvexSet affine_subspace(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size()) throw DimensionError("affine_subspace: rows(A) != dim(b)");
  if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("affine_subspace: empty A");
  const Eigen::LDLT<Matrix> gram((A * A.transpose()).eval());
  if (gram.info() != Eigen::Success || !gram.isPositive() ||
      gram.vectorD().minCoeff() <= 1e-14 * std::max(1.0, gram.vectorD().maxCoeff())) {
    throw std::invalid_argument("affine_subspace: A must have full row rank");
  }
  const Vector base = A.transpose() * gram.solve(b);  // minimum-norm point of the set
  auto row_part = [A, gram](const Vector& p) -> Vector { return A.transpose() * gram.solve(A * p); };
  auto project = [A, b, gram](const Vector& x) -> Vector {
    return x - A.transpose() * gram.solve(A * x - b);
  };
  auto support = [row_part, base](const Vector& p) -> ExtendedReal {
    if ((p - row_part(p)).norm() > kConeTol * p.norm()) return ExtendedReal::infinity();
    return p.dot(base);
  };
  auto support_point = [base](const Vector&) -> std::optional<Vector> { return base; };
  Json d = {{"kind", "affine"}, {"A", detail::to_json_matrix(A)}, {"b", detail::to_json_vector(b)}};
  return {A.cols(), "affine", project, support, support_point, std::move(d)};
}

/// {x : <normal, x> <= offset}.
inline ClosedConvexSet halfspace(const Vector& normal, double offset) {
  const double nn = normal.squaredNorm();
  if (!(nn > 0.0)) throw std::invalid_argument("halfspace: normal must be nonzero");
  auto project = [normal, offset, nn](const Vector& x) -> Vector {
    const double excess = normal.dot(x) - offset;
    return excess > 0.0 ? Vector(x - (excess / nn) * normal) : x;
  };
  auto support = [normal, offset, nn](const Vector& p) -> ExtendedReal {
    const double lambda = normal.dot(p) / nn;
    const double scale = p.norm();
    if ((p - lambda * normal).norm() > kConeTol * scale) return ExtendedReal::infinity();
    if (lambda < -kConeTol * scale / std::sqrt(nn)) return ExtendedReal::infinity();
    return std::max(lambda, 0.0) * offset;
  };
  auto support_point = [normal, offset, nn](const Vector&) -> std::optional<Vector> {
    return Vector((offset / nn) * normal);
  };
  Json d = {{"kind", "halfspace"}, {"normal", detail::to_json_vector(normal)}, {"offset", offset}};
  return {normal.size(), "halfspace", project, support, support_point, std::move(d)};
}

/// Closed Euclidean ball; radius 0 gives a singleton.
inline ClosedConvexSet ball(const Vector& center, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("ball: radius must be nonnegative");
  auto project = [center, radius](const Vector& x) -> Vector {
    const Vector d = x - center;
    const double n = d.norm();
    return n <= radius ? x : Vector(center + (radius / n) * d);
  };
  auto support = [center, radius](const Vector& p) -> ExtendedReal {
    return p.dot(center) + radius * p.norm();
  };
  auto support_point = [center, radius](const Vector& p) -> std::optional<Vector> {
    const double n = p.norm();
    return n == 0.0 ? center : Vector(center + (radius / n) * p);
  };
  Json d = {{"kind", "ball"}, {"center", detail::to_json_vector(center)}, {"radius", radius}};
  return {center.size(), "ball", project, support, support_point, std::move(d)};
}

inline ClosedConvexSet point_set(const Vector& z) { return ball(z, 0.0); }

/// Axis-aligned box with finite bounds.
inline ClosedConvexSet box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) throw DimensionError("box: bound dimensions differ");
  if ((upper - lower).minCoeff() < 0.0) throw std::invalid_argument("box: lower > upper");
  if (!lower.allFinite() || !upper.allFinite()) throw std::invalid_argument("box: bounds must be finite");
  auto project = [lower, upper](const Vector& x) -> Vector { return x.cwiseMax(lower).cwiseMin(upper); };
  auto support = [lower, upper](const Vector& p) -> ExtendedReal {
    return p.cwiseProduct(lower).cwiseMax(p.cwiseProduct(upper)).sum();
  };
  auto support_point = [lower, upper](const Vector& p) -> std::optional<Vector> {
    Vector x(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) x[i] = p[i] >= 0.0 ? upper[i] : lower[i];
    return x;
  };
  Json d = {{"kind", "box"}, {"lower", detail::to_json_vector(lower)}, {"upper", detail::to_json_vector(upper)}};
  return {lower.size(), "box", project, support, support_point, std::move(d)};
}

/// R^n itself: N(x) = {0}, sigma = indicator of {0}.
inline ClosedConvexSet whole_space(Eigen::Index n) {
  auto project = [](const Vector& x) -> Vector { return x; };
  auto support = [](const Vector& p) -> ExtendedReal {
    return p.isZero(0.0) ? ExtendedReal{0.0} : ExtendedReal::infinity();
  };
  auto support_point = [n](const Vector&) -> std::optional<Vector> { return Vector::Zero(n); };
  Json d = {{"kind", "whole"}, {"dimension", n}};
  return {n, "whole", project, support, support_point, std::move(d)};
}

// ---------------------------------------------------------------------------
// SmoothConvexFunction
// ---------------------------------------------------------------------------

/// Convex, differentiable, with L-Lipschitz gradient. Immutable; copies share
/// the underlying callables.
class SmoothConvexFunction {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using ConjugateFn = std::function<ExtendedReal(const Vector&)>;

  struct Constants {
    double grad_lipschitz = 0.0;
    double strong_convexity = 0.0;
    std::optional<double> lower_bound;
  };

  SmoothConvexFunction(Eigen::Index dimension, std::string kind, ValueFn value, GradientFn gradient,
                       Constants constants, ConjugateFn conjugate = {}, Json descriptor = Json::object())
      : data_(std::make_shared<const Data>(Data{dimension, std::move(kind), std::move(value),
                                                std::move(gradient), constants, std::move(conjugate),
                                                std::move(descriptor)})) {
    if (dimension <= 0) throw std::invalid_argument("SmoothConvexFunction: dimension must be positive");
    if (!(constants.grad_lipschitz >= 0.0) || !(constants.strong_convexity >= 0.0) ||
        constants.strong_convexity > constants.grad_lipschitz) {
      throw std::invalid_argument("SmoothConvexFunction: need 0 <= mu <= L");
    }
  }

  Eigen::Index dimension() const { return data_->dimension; }
  const std::string& kind() const { return data_->kind; }
  const Json& descriptor() const { return data_->descriptor; }
  double grad_lipschitz() const { return data_->constants.grad_lipschitz; }
  double strong_convexity() const { return data_->constants.strong_convexity; }
  const std::optional<double>& lower_bound() const { return data_->constants.lower_bound; }
  bool has_conjugate() const { return static_cast<bool>(data_->conjugate); }

  double value(const Vector& x) const {
    require_dimension(dimension(), x, "eval");
    return data_->value(x);
  }

  Vector gradient(const Vector& x) const {
    require_dimension(dimension(), x, "grad");
    return data_->gradient(x);
  }

  ExtendedReal conjugate(const Vector& p) const {
    require_dimension(dimension(), p, "conjugate_eval");
    if (!data_->conjugate) throw ConjugateUnavailable("conjugate unavailable for '" + kind() + "'");
    return data_->conjugate(p);
  }

 private:
  struct Data {
    Eigen::Index dimension;
    std::string kind;
    ValueFn value;
    GradientFn gradient;
    Constants constants;
    ConjugateFn conjugate;
    Json descriptor;
  };
  std::shared_ptr<const Data> data_;
};

inline double eval(const SmoothConvexFunction& f, const Vector& x) { return f.value(x); }
inline Vector grad(const SmoothConvexFunction& f, const Vector& x) { return f.gradient(x); }
inline ExtendedReal conjugate_eval(const SmoothConvexFunction& f, const Vector& p) { return f.conjugate(p); }
inline ExtendedReal support(const ClosedConvexSet& set, const Vector& p) { return set.support(p); }
inline Vector project(const ClosedConvexSet& set, const Vector& x) { return set.project(x); }

/// 1/2 <A x, x> - <b, x> + c with A symmetric positive semidefinite.
inline SmoothConvexFunction quadratic(const Matrix& A, const Vector& b, double c0 = 0.0) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw DimensionError("quadratic: shape mismatch");
  if ((A - A.transpose()).norm() > 1e-12 * std::max(1.0, A.norm())) {
    throw std::invalid_argument("quadratic: A must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const Vector lambda = eig.eigenvalues();
  const double lmax = std::max(0.0, lambda.maxCoeff());
  const double cutoff = 1e-12 * std::max(1.0, lmax);
  if (lambda.minCoeff() < -cutoff) throw std::invalid_argument("quadratic: A must be positive semidefinite");

  // Pseudo-inverse and range projector from the eigendecomposition.
  const Matrix& Q = eig.eigenvectors();
  Vector inv_lambda = Vector::Zero(lambda.size());
  Vector range_mask = Vector::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > cutoff) {
      inv_lambda[i] = 1.0 / lambda[i];
      range_mask[i] = 1.0;
    }
  }
  const Matrix pinv = Q * inv_lambda.asDiagonal() * Q.transpose();
  const Matrix range_proj = Q * range_mask.asDiagonal() * Q.transpose();
  auto in_range = [range_proj](const Vector& w) { return (w - range_proj * w).norm() <= kConeTol * w.norm(); };

  SmoothConvexFunction::Constants c;
  c.grad_lipschitz = lmax;
  c.strong_convexity = std::max(0.0, lambda.minCoeff());
  if (c.strong_convexity <= cutoff) c.strong_convexity = 0.0;
  if (in_range(b)) c.lower_bound = c0 - 0.5 * b.dot(pinv * b);

  auto value = [A, b, c0](const Vector& x) { return 0.5 * x.dot(A * x) - b.dot(x) + c0; };
  auto gradient = [A, b](const Vector& x) -> Vector { return A * x - b; };
  auto conjugate = [pinv, b, c0, in_range](const Vector& p) -> ExtendedReal {
    const Vector w = p + b;
    if (!in_range(w)) return ExtendedReal::infinity();
    return 0.5 * w.dot(pinv * w) - c0;
  };
  Json d = {{"kind", "quadratic"}, {"A", detail::to_json_matrix(A)}, {"b", detail::to_json_vector(b)}};
  if (c0 != 0.0) d["c"] = c0;
  return {A.rows(), "quadratic", value, gradient, c, conjugate, std::move(d)};
}

/// 1/2 ||x - center||^2.
inline SmoothConvexFunction shifted_norm(const Vector& center) {
  auto value = [center](const Vector& x) { return 0.5 * (x - center).squaredNorm(); };
  auto gradient = [center](const Vector& x) -> Vector { return x - center; };
  auto conjugate = [center](const Vector& p) -> ExtendedReal { return 0.5 * p.squaredNorm() + p.dot(center); };
  Json d = {{"kind", "shifted_norm"}, {"center", detail::to_json_vector(center)}};
  return {center.size(), "shifted_norm", value, gradient, {1.0, 1.0, 0.0}, conjugate, std::move(d)};
}

/// 1/2 dist^2(x, C). Gradient x - P_C(x) is 1-Lipschitz; the conjugate is
/// sigma_C + 1/2 ||.||^2 (infimal convolution of the indicator and 1/2||.||^2).
inline SmoothConvexFunction dist2(const ClosedConvexSet& set) {
  auto value = [set](const Vector& x) { return 0.5 * (x - set.project(x)).squaredNorm(); };
  auto gradient = [set](const Vector& x) -> Vector { return x - set.project(x); };
  auto conjugate = [set](const Vector& p) -> ExtendedReal { return set.support(p) + 0.5 * p.squaredNorm(); };
  Json d = {{"kind", "dist2"}, {"set", set.descriptor()}};
  return {set.dimension(), "dist2", value, gradient, {1.0, 0.0, 0.0}, conjugate, std::move(d)};
}

/// log sum_i exp(x_i). Not bounded below; conjugate is the negative entropy
/// restricted to the probability simplex.
inline SmoothConvexFunction log_sum_exp(Eigen::Index n) {
  auto value = [](const Vector& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
  };
  auto gradient = [](const Vector& x) -> Vector {
    const double m = x.maxCoeff();
    const Eigen::ArrayXd e = (x.array() - m).exp();
    return (e / e.sum()).matrix();
  };
  auto conjugate = [](const Vector& p) -> ExtendedReal {
    const double tol = 1e-12 * static_cast<double>(p.size());
    if (p.minCoeff() < -tol || std::abs(p.sum() - 1.0) > tol) return ExtendedReal::infinity();
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) s += p[i] * std::log(p[i]);
    }
    return s;
  };
  Json d = {{"kind", "logsumexp"}, {"dimension", n}};
  return {n, "logsumexp", value, gradient, {1.0, 0.0, std::nullopt}, conjugate, std::move(d)};
}

/// Huber-smoothed hinge H_delta(<a, x> - b), where H_delta(s) is 0 for s <= 0,
/// s^2/(2 delta) on [0, delta] and s - delta/2 beyond. Vanishes exactly on
/// the halfspace {<a, x> <= b}.
inline SmoothConvexFunction huber_hinge(const Vector& normal, double offset, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber_hinge: delta must be positive");
  const double nn = normal.squaredNorm();
  if (!(nn > 0.0)) throw std::invalid_argument("huber_hinge: normal must be nonzero");
  auto value = [normal, offset, delta](const Vector& x) {
    const double s = normal.dot(x) - offset;
    if (s <= 0.0) return 0.0;
    if (s <= delta) return s * s / (2.0 * delta);
    return s - 0.5 * delta;
  };
  auto gradient = [normal, offset, delta](const Vector& x) -> Vector {
    const double s = normal.dot(x) - offset;
    return std::clamp(s / delta, 0.0, 1.0) * normal;
  };
  // f*(lambda a) = delta lambda^2 / 2 + lambda b for lambda in [0, 1].
  auto conjugate = [normal, offset, delta, nn](const Vector& p) -> ExtendedReal {
    const double lambda = normal.dot(p) / nn;
    const double scale = p.norm();
    if ((p - lambda * normal).norm() > kConeTol * scale) return ExtendedReal::infinity();
    const double slack = kConeTol * scale / std::sqrt(nn);
    if (lambda < -slack || lambda > 1.0 + slack) return ExtendedReal::infinity();
    const double l = std::clamp(lambda, 0.0, 1.0);
    return 0.5 * delta * l * l + l * offset;
  };
  Json d = {{"kind", "huber_hinge"}, {"normal", detail::to_json_vector(normal)}, {"offset", offset}, {"delta", delta}};
  return {normal.size(), "huber_hinge", value, gradient, {nn / delta, 0.0, 0.0}, conjugate, std::move(d)};
}

/// The zero function; its conjugate is the indicator of {0}.
inline SmoothConvexFunction zero_function(Eigen::Index n) {
  auto value = [](const Vector&) { return 0.0; };
  auto gradient = [n](const Vector&) -> Vector { return Vector::Zero(n); };
  auto conjugate = [](const Vector& p) -> ExtendedReal {
    return p.isZero(0.0) ? ExtendedReal{0.0} : ExtendedReal::infinity();
  };
  Json d = {{"kind", "zero"}, {"dimension", n}};
  return {n, "zero", value, gradient, {0.0, 0.0, 0.0}, conjugate, std::move(d)};
}

// ---------------------------------------------------------------------------
// PenaltyFunction
// ---------------------------------------------------------------------------

/// psi >= 0 with argmin psi = psi^{-1}(0) = zero_set (nonempty).
class PenaltyFunction {
 public:
  PenaltyFunction(SmoothConvexFunction base, ClosedConvexSet zero_set)
      : base_(std::move(base)), zero_set_(std::move(zero_set)) {
    if (base_.dimension() != zero_set_.dimension()) throw DimensionError("PenaltyFunction: dimension mismatch");
    witness_ = zero_set_.project(Vector::Zero(base_.dimension()));
    if (!(std::abs(base_.value(witness_)) <= 1e-12)) {
      throw std::invalid_argument("PenaltyFunction: penalty does not vanish on its zero set");
    }
  }

  const SmoothConvexFunction& base() const { return base_; }
  const ClosedConvexSet& zero_set() const { return zero_set_; }
  const Vector& witness() const { return witness_; }
  Eigen::Index dimension() const { return base_.dimension(); }

  double value(const Vector& x) const { return base_.value(x); }
  Vector gradient(const Vector& x) const { return base_.gradient(x); }
  ExtendedReal conjugate(const Vector& p) const { return base_.conjugate(p); }
  ExtendedReal support(const Vector& p) const { return zero_set_.support(p); }
  bool is_zero() const { return base_.kind() == "zero"; }

 private:
  SmoothConvexFunction base_;
  ClosedConvexSet zero_set_;
  Vector witness_;
};

inline PenaltyFunction dist2_penalty(const ClosedConvexSet& set) { return {dist2(set), set}; }

inline PenaltyFunction huber_hinge_penalty(const Vector& normal, double offset, double delta) {
  return {huber_hinge(normal, offset, delta), halfspace(normal, offset)};
}

inline PenaltyFunction zero_penalty(Eigen::Index n) { return {zero_function(n), whole_space(n)}; }

// ---------------------------------------------------------------------------
// Numeric self-checks
// ---------------------------------------------------------------------------

/// Max over coordinates of |g_i - fd_i| / max(1, ||g||_inf), fd by central
/// differences with step h.
inline double fd_gradient_check(const SmoothConvexFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient_check: h must be positive");
  const Vector g = f.gradient(x);
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  double worst = 0.0;
  Vector xp = x;
  Vector xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const double fd = (f.value(xp) - f.value(xm)) / (xp[i] - xm[i]);
    worst = std::max(worst, std::abs(g[i] - fd) / scale);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return worst;
}

/// Sampled sup of <p, x> - f(x). Always a LOWER bound on f*(p); never use it
/// to certify integrability.
struct ConjugateLowerBound {
  double value;
  static constexpr bool is_lower_bound = true;
};

inline ConjugateLowerBound sampled_conjugate_lower_bound(const SmoothConvexFunction& f, const Vector& p,
                                                         double radius, int samples, std::uint64_t seed) {
  require_dimension(f.dimension(), p, "sampled_conjugate_lower_bound");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius);
  double best = -std::numeric_limits<double>::infinity();
  Vector x(p.size());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    best = std::max(best, p.dot(x) - f.value(x));
  }
  best = std::max(best, -f.value(Vector::Zero(p.size())));
  return {best};
}

/// Sampled evidence for the SmoothConvexFunction invariants.
struct FunctionAudit {
  double min_convexity_gap = std::numeric_limits<double>::infinity();
  double min_strong_gap = std::numeric_limits<double>::infinity();
  double max_lipschitz_ratio = 0.0;
  double min_value_minus_lower_bound = std::numeric_limits<double>::infinity();

  bool ok(double slack = 1e-9) const {
    return min_convexity_gap >= -slack && min_strong_gap >= -slack && min_value_minus_lower_bound >= -slack;
  }
};

inline FunctionAudit audit_function(const SmoothConvexFunction& f, double radius, int pairs,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius);
  const Eigen::Index n = f.dimension();
  FunctionAudit a;
  Vector x(n), y(n);
  for (int s = 0; s < pairs; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
    }
    const double fx = f.value(x);
    const double fy = f.value(y);
    const Vector gx = f.gradient(x);
    const Vector gy = f.gradient(y);
    const double scale = std::max({1.0, std::abs(fx), std::abs(fy)});
    const double gap = (fy - fx - gx.dot(y - x)) / scale;
    a.min_convexity_gap = std::min(a.min_convexity_gap, gap);
    if (f.strong_convexity() > 0.0) {
      a.min_strong_gap = std::min(a.min_strong_gap, gap - 0.5 * f.strong_convexity() * (y - x).squaredNorm() / scale);
    }
    const double dx = (x - y).norm();
    if (dx > 0.0) a.max_lipschitz_ratio = std::max(a.max_lipschitz_ratio, (gx - gy).norm() / dx);
    if (f.lower_bound()) {
      a.min_value_minus_lower_bound = std::min({a.min_value_minus_lower_bound, fx - *f.lower_bound(),
                                                fy - *f.lower_bound()});
    }
  }
  return a;
}

}  // namespace penaltyflow

#endif  // PENALTYFLOW_CONVEX_HPP
