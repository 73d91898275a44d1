#pragma once

#include <vector>

#include "cdn/model.hpp"

namespace cdn {

// Finite-support discrete margin as a step CDF: cdf[j] = P(X <= values[j]),
// values strictly ascending, cdf nondecreasing with cdf.back() == 1.
struct DiscreteMargin {
  std::vector<double> values;
  std::vector<double> cdf;

  int support_size() const { return static_cast<int>(values.size()); }
};

DiscreteMargin bernoulli_margin(double p);
DiscreteMargin uniform_margin(int levels);

// p(x) by the backwards finite-difference variant of the message passing:
// the derivative product rule is replaced by the difference product rule,
// which also pins which side (lower or upper CDF step) every variable
// differenced elsewhere sits at. No chain-rule constant is involved.
//
// point holds one support index per variable. Throws OutOfSupport when an
// index is out of range or the margin list does not match the model.
double discrete_pmf(const CdnModel& m,
                    const std::vector<DiscreteMargin>& margins,
                    const std::vector<int>& point);

// C(u) for one factor at copula-scale arguments, the corner-evaluation
// primitive shared with the inclusion-exclusion oracle in the tests.
double factor_cdf(const CopulaFactor& f, const std::vector<double>& v);

}  // namespace cdn
