#pragma once

#include <cmath>
#include <limits>

namespace cdn {

// A real number stored as (sign, ln|value|). Message passing multiplies many
// CDF values in (0,1] whose product underflows double precision long before
// the models of interest get large, so all inference runs on this type.
// Parameter gradients can be negative, hence the explicit sign; sign == 0
// encodes exact zero and pairs with log_abs == -inf.
struct SignedLog {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static SignedLog zero() { return SignedLog{}; }
  static SignedLog one() { return SignedLog{0.0, +1}; }

  static SignedLog from_linear(double x) {
    if (x == 0.0) return zero();
    return SignedLog{std::log(std::fabs(x)), x > 0.0 ? +1 : -1};
  }
  // Value exp(l), known positive (the common case: CDFs and their partials).
  static SignedLog from_log(double l) {
    if (l == -std::numeric_limits<double>::infinity()) return zero();
    return SignedLog{l, +1};
  }
  static SignedLog from_log(double l, int s) {
    if (s == 0 || l == -std::numeric_limits<double>::infinity()) return zero();
    return SignedLog{l, s};
  }

  bool is_zero() const { return sign == 0; }
  double to_linear() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  SignedLog negated() const { return SignedLog{log_abs, -sign}; }

  friend SignedLog operator*(const SignedLog& a, const SignedLog& b) {
    if (a.sign == 0 || b.sign == 0) return zero();
    return SignedLog{a.log_abs + b.log_abs, a.sign * b.sign};
  }
  SignedLog& operator*=(const SignedLog& o) { return *this = *this * o; }

  friend SignedLog operator/(const SignedLog& a, const SignedLog& b) {
    // Division by zero is a caller bug; surface it as NaN rather than trap.
    if (a.sign == 0) return zero();
    return SignedLog{a.log_abs - b.log_abs, a.sign * b.sign};
  }

  // log-sum-exp with sign resolution. When the two magnitudes are equal and
  // the signs oppose, the result is exact zero.
  friend SignedLog operator+(const SignedLog& a, const SignedLog& b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    const SignedLog& big = a.log_abs >= b.log_abs ? a : b;
    const SignedLog& small = a.log_abs >= b.log_abs ? b : a;
    const double d = small.log_abs - big.log_abs;  // <= 0
    if (big.sign == small.sign)
      return SignedLog{big.log_abs + std::log1p(std::exp(d)), big.sign};
    const double m = std::exp(d);
    if (m == 1.0) return zero();
    return SignedLog{big.log_abs + std::log1p(-m), big.sign};
  }
  SignedLog& operator+=(const SignedLog& o) { return *this = *this + o; }

  friend SignedLog operator-(const SignedLog& a, const SignedLog& b) {
    return a + b.negated();
  }
};

}  // namespace cdn
