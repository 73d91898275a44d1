#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cdn/inference.hpp"
#include "cdn/model.hpp"

namespace cdn {

// One step of the conditional method: the variable drawn, the union of
// sampled branches adjacent to it (its conditioning set), and a cached
// engine over the factors touching that branch. Factors that contain the
// variable but none of the branch (the extra factors) contribute u^d each
// and stay out of the tree.
struct SamplingStep {
  int var = -1;
  std::vector<int> branch_vars;   // sorted global ids; empty = fresh branch
  int extra_factors = 0;
  double exponent = 0.0;          // the variable's d in the full model
  std::optional<DspEngine> engine;
  std::vector<int> local_vars;    // sub-model local index -> global id
  int local_var = -1;             // the step variable's local index
  std::vector<int> local_branch;  // branch members' local indices
};

struct SamplingPlan {
  std::vector<int> preset_vars;   // treated as already sampled (conditioning)
  std::vector<SamplingStep> steps;

  std::vector<int> order() const {
    std::vector<int> o;
    o.reserve(steps.size());
    for (const auto& s : steps) o.push_back(s.var);
    return o;
  }
};

// Greedy order construction: at every step the to-do candidate whose
// adjacent sampled branches have the smallest total size is drawn next, ties
// and reseeds resolved by the PRNG. The to-do list starts from the leaves of
// the variable graph (or the presets' unsampled neighbors).
SamplingPlan make_sampling_cliques(const CdnModel& m, std::uint64_t seed,
                                   const std::vector<int>& presets = {});

// Plan for a caller-chosen order over the non-preset variables.
SamplingPlan make_plan_for_order(const CdnModel& m,
                                 const std::vector<int>& order,
                                 const std::vector<int>& presets = {});

// Copula-space sampling; presets must carry values in preset_u aligned with
// plan.preset_vars. Rows are full u vectors. Deterministic given the seed.
std::vector<std::vector<double>> sample_cdn_copula(
    const CdnModel& m, const SamplingPlan& plan, int count,
    std::uint64_t seed, const std::vector<double>& preset_u = {});

// Real-space sampling: copula rows mapped through the margin quantiles.
std::vector<std::vector<double>> sample_cdn(const CdnModel& m,
                                            const SamplingPlan& plan,
                                            int count, std::uint64_t seed);

// Conditional sampling given observed coordinates; plan construction starts
// as if the observed variables had already been sampled.
std::vector<std::vector<double>> sample_conditional_copula(
    const CdnModel& m, const std::vector<std::pair<int, double>>& observed_u,
    int count, std::uint64_t seed);

// Real-space wrapper: observed values given on the x scale.
std::vector<std::vector<double>> sample_conditional(
    const CdnModel& m, const std::vector<std::pair<int, double>>& observed_x,
    int count, std::uint64_t seed);

}  // namespace cdn
