#pragma once

#include <cstdint>
#include <vector>

#include "cdn/errors.hpp"
#include "cdn/signed_log.hpp"

namespace cdn {

enum class CopulaKind { clayton, normal_pair };

struct ParamInterval {
  double lo;
  double hi;  // open interval (lo, hi); hi may be +inf
  bool contains(double x) const { return x > lo && x < hi; }
};

// Open parameter domain for a copula family at the given arity. Throws
// UnsupportedArity for normal factors of arity != 2.
ParamInterval param_domain(CopulaKind kind, int arity);

// During line searches the Clayton parameter may approach its open lower
// limit; evaluations clamp it here to avoid the 0/0 boundary.
inline constexpr double kClaytonThetaFloor = 1e-6;

struct ClaytonCopula {
  double theta;
  int arity;
};

struct NormalPairCopula {
  double rho;
};

// ln of the mixed partial of the Clayton CDF with respect to the argument
// subset in diff_mask (bit i selects u[i]); diff_mask == 0 gives ln C(u).
// Arguments live in (0,1]; entries equal to 1 are marginalized slots and
// must not be differentiated. Evaluated in the u_min-scaled log form, so it
// stays finite for extreme theta and tiny arguments.
SignedLog clayton_log_partial(const ClaytonCopula& c,
                              const std::vector<double>& u,
                              std::uint32_t diff_mask);

// d/dtheta of the above partial (not of its log): returned as the partial
// times the logarithmic derivative, with sign tracked.
SignedLog clayton_log_param_partial(const ClaytonCopula& c,
                                    const std::vector<double>& u,
                                    std::uint32_t diff_mask);

// Bivariate normal copula pieces on the probit scale. w may be +inf for a
// marginalized slot (and -inf for an impossible one, which yields zero);
// diff_mask must not cover a non-finite slot.
SignedLog normal_pair_log_partial(const NormalPairCopula& c, double w1,
                                  double w2, std::uint32_t diff_mask);

// d/drho of the corresponding partial via the Plackett identity.
SignedLog normal_pair_log_param_partial(const NormalPairCopula& c, double w1,
                                        double w2, std::uint32_t diff_mask);

}  // namespace cdn
