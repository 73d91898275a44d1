#pragma once

#include <vector>

#include "cdn/errors.hpp"

namespace cdn {

// Standard normal kernel, implemented from scratch so the numerics are
// self-contained: Cody-style rational erf/erfc, Acklam quantile with one
// Newton polish, and the Drezner/Genz quadrature for the bivariate CDF.

double std_normal_pdf(double x);
double std_normal_log_pdf(double x);
double std_normal_cdf(double x);
// ln Phi(x); switches to the asymptotic tail expansion where Phi underflows.
double std_normal_log_cdf(double x);
// Inverse CDF; accepts p in (0,1), and maps 0 / 1 to -inf / +inf.
double std_normal_quantile(double p);
// P(X <= x, Y <= y) for standard bivariate normal with correlation rho.
// Accepts infinite arguments. Absolute accuracy around 1e-14.
double binormal_cdf(double x, double y, double rho);

// Arguments are clamped to this interval before any probit transform, so
// log-space arithmetic stays finite; marginalized slots stay exactly 1.
inline constexpr double kUnitClampLo = 1e-15;
inline constexpr double kUnitClampHi = 1.0 - 1e-15;
double clamp_unit(double u);

struct NormalMargin {
  double mu = 0.0;
  double sigma = 1.0;

  double cdf(double x) const;
  double pdf(double x) const;
  double log_pdf(double x) const;
  double quantile(double p) const;
};

// Population (1/m) MLE. Throws DegenerateSample on fewer than two points or
// zero variance.
NormalMargin fit_mle(const std::vector<double>& samples);

// u = F(x); +inf -> 1, -inf -> 0.
double to_copula_coord(const NormalMargin& m, double x);

// d(Phi^{-1})/dv = 1 / phi(Phi^{-1}(v)). Throws OutOfUnitInterval unless
// v lies in (0,1); values survive the uniform clamp applied upstream.
double probit_chain_term(double v);

}  // namespace cdn
