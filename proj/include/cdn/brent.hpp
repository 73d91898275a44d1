#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdn/errors.hpp"

namespace cdn {

struct BrentResult {
  double root = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Classic Brent root bracketing: bisection, secant, and inverse quadratic
// interpolation. The objective must have opposite (or zero) signs at the
// bracket ends. Tolerance is on the root location.
template <class F>
BrentResult brent_root(F&& f, double a, double b, double tol,
                       int max_iter = 200) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return {a, 0, true};
  if (fb == 0.0) return {b, 0, true};
  if ((fa > 0.0) == (fb > 0.0))
    throw NoBracket("objective has the same sign at both bracket ends");

  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  BrentResult res;
  for (int iter = 1; iter <= max_iter; ++iter) {
    res.iterations = iter;
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() *
                            std::fabs(b) +
                        0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) {
      res.root = b;
      res.converged = true;
      return res;
    }
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      const double s = fb / fa;
      double p;
      double q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q),
                             std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    if (std::fabs(d) > tol1)
      b += d;
    else
      b += xm > 0.0 ? tol1 : -tol1;
    fb = f(b);
  }
  res.root = b;
  res.converged = false;
  throw MaxIterations("root finder exceeded iteration cap");
}

}  // namespace cdn
