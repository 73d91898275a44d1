#pragma once

#include <string>
#include <vector>

#include "cdn/copulas.hpp"
#include "cdn/margins.hpp"

namespace cdn {

struct CopulaFactor {
  CopulaKind kind = CopulaKind::clayton;
  double param = 1.0;
  std::vector<int> scope;  // variable indices, duplicate-free
};

// The model is a product of copula CDF factors; each variable in k factors
// enters every one of them raised to d = 1/k, which keeps the product's
// margins intact. Derived fields are filled by finalize().
struct CdnModel {
  struct Variable {
    std::string name;
    NormalMargin margin;
  };

  std::vector<Variable> variables;
  std::vector<CopulaFactor> factors;

  // Derived (finalize):
  std::vector<int> k;             // per-variable factor membership count
  std::vector<double> d;          // per-variable exponent
  std::vector<char> probit_scale; // carried as w = probit(v) during inference

  int num_vars() const { return static_cast<int>(variables.size()); }
  int num_factors() const { return static_cast<int>(factors.size()); }

  // Computes k/d/scale. Throws InvalidModel listing every violation.
  void finalize();
  // Sampling sub-models keep the exponents of the parent model; this
  // finalizes structure but pins d explicitly.
  void finalize_with_exponents(const std::vector<double>& d_override);
};

// All structural violations, empty when the model is well formed.
std::vector<std::string> validate(const CdnModel& m);

enum class VarState { free, marginalized, point, cumulative };

struct Evidence {
  struct Entry {
    VarState state = VarState::marginalized;
    double value = 0.0;
  };
  std::vector<Entry> entries;

  static Evidence all_marginalized(int n) {
    Evidence e;
    e.entries.resize(n);
    return e;
  }
};

// Per-variable copula-space arguments plus the chain-rule constant for the
// differentiated set. w holds the probit coordinate for probit-scale
// variables and is unused otherwise.
struct EvalPoint {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> w;
  std::vector<char> diff;
  double log_kappa = 0.0;
};

// Real-space point: kappa includes the margin densities of differentiated
// variables. x may be +/-inf (u pinned to 1 / 0 with no clamping when the
// variable is not differentiated).
EvalPoint transform_point(const CdnModel& m, const std::vector<double>& x,
                          const std::vector<char>& diff);

// Copula-space point: kappa carries only the u -> v (-> w) chain terms, the
// natural unit for copula likelihoods and conditional-CDF ratios.
EvalPoint eval_point_from_u(const CdnModel& m, const std::vector<double>& u,
                            const std::vector<char>& diff);

// Evidence reduction: marginalized -> argument 1, point -> transformed and
// differentiated, cumulative bound -> transformed but fixed. Free variables
// are treated as marginalized (the query has not asked about them).
EvalPoint reduce(const CdnModel& m, const Evidence& e);

// JSON round trip per the documented schema; unknown fields are rejected.
CdnModel model_from_json(const std::string& text);
std::string model_to_json(const CdnModel& m);
CdnModel load_model(const std::string& path);
void save_model(const CdnModel& m, const std::string& path);

}  // namespace cdn
