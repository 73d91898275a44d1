#include "cdn/copulas.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "cdn/margins.hpp"

namespace cdn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;

struct ClaytonCore {
  double log_s;      // ln S where S = sum u^-theta - n + 1
  double log_t;      // ln T, T = S * u_min^theta (>= 1)
  double t;          // T in linear space
  double dlog_s;     // d(ln S)/dtheta
  double sum_log_u;  // over all arguments
};

// Stable evaluation pieces shared by the value and parameter partials.
// Everything is scaled by u_min^theta: with r_i = (u_min/u_i)^theta in
// (0,1], T = sum_i r_i + (1-n) u_min^theta satisfies T >= 1, so ln T is a
// log1p of a nonnegative quantity and ln S = ln T - theta ln u_min.
ClaytonCore clayton_core(double theta, const std::vector<double>& u) {
  const int n = static_cast<int>(u.size());
  double log_umin = 0.0;
  for (double ui : u) log_umin = std::min(log_umin, std::log(ui));
  double rest = 0.0;       // T - 1
  double weighted = 0.0;   // sum (-ln u_i) r_i
  double sum_log_u = 0.0;
  for (double ui : u) {
    const double log_ui = std::log(ui);
    sum_log_u += log_ui;
    const double r = std::exp(theta * (log_umin - log_ui));
    weighted += -log_ui * r;
    rest += r;
  }
  rest -= 1.0;  // remove the r = 1 contribution of the minimum itself
  rest += (1.0 - n) * std::exp(theta * log_umin);
  // Guard against a negative epsilon from cancellation; T >= 1 analytically.
  if (rest < 0.0) rest = 0.0;
  ClaytonCore core;
  core.t = 1.0 + rest;
  core.log_t = std::log1p(rest);
  core.log_s = core.log_t - theta * log_umin;
  core.dlog_s = weighted / core.t;
  core.sum_log_u = sum_log_u;
  return core;
}

void check_clayton_args(const ClaytonCopula& c, const std::vector<double>& u,
                        std::uint32_t diff_mask) {
  if (c.theta <= 0.0)
    throw ParamOutOfDomain("clayton theta must be positive");
  if (diff_mask >> u.size())
    throw InvalidMask("differentiation mask outside factor scope");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] == 1.0 && (diff_mask >> i) & 1u)
      throw InvalidMask("marginalized argument cannot be differentiated");
  }
}

double mask_log_u_sum(const std::vector<double>& u, std::uint32_t diff_mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if ((diff_mask >> i) & 1u) s += std::log(u[i]);
  return s;
}

}  // namespace

ParamInterval param_domain(CopulaKind kind, int arity) {
  if (kind == CopulaKind::clayton) {
    if (arity < 2) throw UnsupportedArity("clayton factor needs arity >= 2");
    return ParamInterval{0.0, kInf};
  }
  if (arity != 2)
    throw UnsupportedArity("normal copula factors are bivariate only");
  return ParamInterval{-1.0, 1.0};
}

SignedLog clayton_log_partial(const ClaytonCopula& c,
                              const std::vector<double>& u,
                              std::uint32_t diff_mask) {
  check_clayton_args(c, u, diff_mask);
  for (double ui : u)
    if (ui <= 0.0) return SignedLog::zero();
  const double theta = c.theta;
  const ClaytonCore core = clayton_core(theta, u);
  const int m = std::popcount(diff_mask);
  if (m == 0) return SignedLog::from_log(-core.log_s / theta);
  // ln d^m C / da = sum_{k<m} ln(1 + k theta)
  //                 - (1+theta) sum_{i in a} ln u_i - (1/theta + m) ln S.
  double log_val = 0.0;
  for (int k = 1; k < m; ++k) log_val += std::log1p(k * theta);
  log_val -= (1.0 + theta) * mask_log_u_sum(u, diff_mask);
  log_val -= (1.0 / theta + m) * core.log_s;
  return SignedLog::from_log(log_val);
}

SignedLog clayton_log_param_partial(const ClaytonCopula& c,
                                    const std::vector<double>& u,
                                    std::uint32_t diff_mask) {
  check_clayton_args(c, u, diff_mask);
  for (double ui : u)
    if (ui <= 0.0) return SignedLog::zero();
  const double theta = c.theta;
  const ClaytonCore core = clayton_core(theta, u);
  const int m = std::popcount(diff_mask);
  // Logarithmic derivative of the partial with respect to theta.
  double g = core.log_s / (theta * theta) - (1.0 / theta + m) * core.dlog_s;
  for (int k = 1; k < m; ++k) g += k / (1.0 + k * theta);
  g -= mask_log_u_sum(u, diff_mask);
  const SignedLog value = clayton_log_partial(c, u, diff_mask);
  return value * SignedLog::from_linear(g);
}

SignedLog normal_pair_log_partial(const NormalPairCopula& c, double w1,
                                  double w2, std::uint32_t diff_mask) {
  const double rho = c.rho;
  if (!(rho > -1.0 && rho < 1.0))
    throw ParamOutOfDomain("normal copula correlation must lie in (-1,1)");
  if (diff_mask > 3u)
    throw InvalidMask("differentiation mask outside factor scope");
  if ((w1 == kInf && (diff_mask & 1u)) || (w2 == kInf && (diff_mask & 2u)))
    throw InvalidMask("marginalized argument cannot be differentiated");
  const double srho = std::sqrt((1.0 - rho) * (1.0 + rho));
  switch (diff_mask) {
    case 0u: {
      const double p = binormal_cdf(w1, w2, rho);
      if (p <= 0.0) return SignedLog::zero();
      return SignedLog::from_log(std::log(p));
    }
    case 1u: {
      if (w1 == -kInf) return SignedLog::zero();
      const double z = w2 == kInf ? kInf : (w2 - rho * w1) / srho;
      return SignedLog::from_log(std_normal_log_pdf(w1) +
                                 std_normal_log_cdf(z));
    }
    case 2u: {
      if (w2 == -kInf) return SignedLog::zero();
      const double z = w1 == kInf ? kInf : (w1 - rho * w2) / srho;
      return SignedLog::from_log(std_normal_log_pdf(w2) +
                                 std_normal_log_cdf(z));
    }
    default: {
      if (w1 == -kInf || w2 == -kInf || w1 == kInf || w2 == kInf)
        return SignedLog::zero();
      const double q =
          (w1 * w1 - 2.0 * rho * w1 * w2 + w2 * w2) / (2.0 * srho * srho);
      return SignedLog::from_log(-kLogTwoPi - std::log(srho) - q);
    }
  }
}

SignedLog normal_pair_log_param_partial(const NormalPairCopula& c, double w1,
                                        double w2, std::uint32_t diff_mask) {
  const double rho = c.rho;
  if (!(rho > -1.0 && rho < 1.0))
    throw ParamOutOfDomain("normal copula correlation must lie in (-1,1)");
  if (diff_mask > 3u)
    throw InvalidMask("differentiation mask outside factor scope");
  if ((w1 == kInf && (diff_mask & 1u)) || (w2 == kInf && (diff_mask & 2u)))
    throw InvalidMask("marginalized argument cannot be differentiated");
  // All cases are multiples of the bivariate density (Plackett's identity).
  // An infinite argument reduces the factor to a margin or to zero, neither
  // of which depends on rho, so the partial vanishes.
  if (!std::isfinite(w1) || !std::isfinite(w2)) return SignedLog::zero();
  const SignedLog density = normal_pair_log_partial(c, w1, w2, 3u);
  if (density.is_zero()) return SignedLog::zero();
  const double omr = (1.0 - rho) * (1.0 + rho);
  switch (diff_mask) {
    case 0u:
      return density;
    case 1u:
      return density * SignedLog::from_linear((rho * w2 - w1) / omr);
    case 2u:
      return density * SignedLog::from_linear((rho * w1 - w2) / omr);
    default: {
      const double t =
          (rho * w1 - w2) * (rho * w2 - w1) / (omr * omr) + rho / omr;
      return density * SignedLog::from_linear(t);
    }
  }
}

}  // namespace cdn
