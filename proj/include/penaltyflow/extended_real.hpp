#ifndef PENALTYFLOW_EXTENDED_REAL_HPP
#define PENALTYFLOW_EXTENDED_REAL_HPP

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace penaltyflow {

/// A value in R u {+inf}. Conjugates and support functions of proper convex
/// functions never reach -inf, so only the upper end is represented.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit from finite reals

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Finite payload; throws on +inf so an infinity never leaks into
  /// ordinary double arithmetic.
  double value() const {
    if (infinite_) throw std::domain_error("ExtendedReal: value() of +inf");
    return value_;
  }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return {a.value_ + b.value_};
  }

  /// a - b; undefined for inf - inf, and subtracting +inf from a finite value
  /// would need -inf, which is not representable.
  friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) {
    if (b.infinite_) throw std::domain_error("ExtendedReal: subtraction of +inf");
    if (a.infinite_) return infinity();
    return {a.value_ - b.value_};
  }

  /// Scaling by s >= 0 (0 * inf is taken as 0, the convex-analysis convention
  /// for positively homogeneous functions at the origin).
  friend ExtendedReal operator*(double s, ExtendedReal a) {
    if (s < 0) throw std::domain_error("ExtendedReal: negative scaling");
    if (a.infinite_) return s == 0.0 ? ExtendedReal{0.0} : infinity();
    return {s * a.value_};
  }

  friend bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  friend bool operator<(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator<=(ExtendedReal a, ExtendedReal b) { return !(b < a); }
  friend bool operator>(ExtendedReal a, ExtendedReal b) { return b < a; }
  friend bool operator>=(ExtendedReal a, ExtendedReal b) { return !(a < b); }

  friend std::ostream& operator<<(std::ostream& os, ExtendedReal a) {
    if (a.infinite_) return os << "+inf";
    return os << a.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace penaltyflow

#endif  // PENALTYFLOW_EXTENDED_REAL_HPP
