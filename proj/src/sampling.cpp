#include "cdn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "cdn/brent.hpp"
#include "cdn/cliquetree.hpp"
#include "cdn/errors.hpp"
#include "cdn/rng.hpp"

namespace cdn {

namespace {

std::vector<std::vector<int>> var_neighbors(const CdnModel& m) {
  std::vector<std::set<int>> nb(m.num_vars());
  for (const auto& f : m.factors)
    for (int a : f.scope)
      for (int b : f.scope)
        if (a != b) nb[a].insert(b);
  std::vector<std::vector<int>> out(m.num_vars());
  for (int v = 0; v < m.num_vars(); ++v)
    out[v].assign(nb[v].begin(), nb[v].end());
  return out;
}

struct Dsu {
  std::vector<int> parent;
  std::vector<int> size;
  explicit Dsu(int n) : parent(n), size(n, 1) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

SamplingStep build_step(const CdnModel& m, int var,
                        std::vector<int> branch_vars) {
  SamplingStep step;
  step.var = var;
  step.exponent = m.d[var];
  step.branch_vars = std::move(branch_vars);
  std::vector<char> in_branch(m.num_vars(), 0);
  for (int b : step.branch_vars) in_branch[b] = 1;

  std::vector<int> tree_factors;
  for (int f = 0; f < m.num_factors(); ++f) {
    const auto& scope = m.factors[f].scope;
    const bool touches_branch =
        std::any_of(scope.begin(), scope.end(),
                    [&](int v) { return in_branch[v]; });
    const bool has_var =
        std::find(scope.begin(), scope.end(), var) != scope.end();
    if (touches_branch)
      tree_factors.push_back(f);
    else if (has_var)
      ++step.extra_factors;
  }
  if (step.branch_vars.empty()) return step;  // fresh branch, closed form

  std::set<int> var_set;
  for (int f : tree_factors)
    var_set.insert(m.factors[f].scope.begin(), m.factors[f].scope.end());
  step.local_vars.assign(var_set.begin(), var_set.end());
  std::vector<int> local_of(m.num_vars(), -1);
  for (std::size_t i = 0; i < step.local_vars.size(); ++i)
    local_of[step.local_vars[i]] = static_cast<int>(i);

  CdnModel sub;
  std::vector<double> d_override;
  for (int g : step.local_vars) {
    sub.variables.push_back(m.variables[g]);
    d_override.push_back(m.d[g]);
  }
  for (int f : tree_factors) {
    CopulaFactor cf = m.factors[f];
    for (int& v : cf.scope) v = local_of[v];
    sub.factors.push_back(std::move(cf));
  }
  sub.finalize_with_exponents(d_override);

  std::vector<std::vector<int>> scopes;
  scopes.reserve(sub.factors.size());
  for (const auto& f : sub.factors) scopes.push_back(f.scope);
  CliqueTree tree = build_min_fill(scopes, sub.num_vars());
  step.engine.emplace(std::move(sub), std::move(tree));
  step.local_var = local_of[var];
  for (int b : step.branch_vars) step.local_branch.push_back(local_of[b]);
  return step;
}

SamplingPlan plan_from_order(const CdnModel& m,
                             const std::vector<std::vector<int>>& nbrs,
                             const std::vector<int>& order,
                             const std::vector<int>& presets) {
  SamplingPlan plan;
  plan.preset_vars = presets;
  Dsu branches(m.num_vars());
  std::vector<char> sampled(m.num_vars(), 0);
  for (int p : presets) sampled[p] = 1;
  for (int p : presets)
    for (int q : nbrs[p])
      if (sampled[q]) branches.unite(p, q);

  for (int v : order) {
    std::set<int> roots;
    for (int q : nbrs[v])
      if (sampled[q]) roots.insert(branches.find(q));
    std::vector<int> branch_vars;
    if (!roots.empty()) {
      for (int g = 0; g < m.num_vars(); ++g)
        if (sampled[g] && roots.count(branches.find(g)))
          branch_vars.push_back(g);
    }
    plan.steps.push_back(build_step(m, v, std::move(branch_vars)));
    sampled[v] = 1;
    for (int q : nbrs[v])
      if (sampled[q]) branches.unite(v, q);
  }
  return plan;
}

}  // namespace

SamplingPlan make_plan_for_order(const CdnModel& m,
                                 const std::vector<int>& order,
                                 const std::vector<int>& presets) {
  return plan_from_order(m, var_neighbors(m), order, presets);
}

SamplingPlan make_sampling_cliques(const CdnModel& m, std::uint64_t seed,
                                   const std::vector<int>& presets) {
  const auto nbrs = var_neighbors(m);
  Rng rng(seed);
  Dsu branches(m.num_vars());
  std::vector<char> sampled(m.num_vars(), 0);
  std::vector<char> in_todo(m.num_vars(), 0);
  for (int p : presets) sampled[p] = 1;
  for (int p : presets)
    for (int q : nbrs[p])
      if (sampled[q]) branches.unite(p, q);

  std::vector<int> todo;
  const auto push_todo = [&](int v) {
    if (!sampled[v] && !in_todo[v]) {
      todo.push_back(v);
      in_todo[v] = 1;
    }
  };
  for (int p : presets)
    for (int q : nbrs[p]) push_todo(q);

  const auto reseed = [&]() {
    std::vector<int> leaves;
    std::vector<int> rest;
    for (int v = 0; v < m.num_vars(); ++v) {
      if (sampled[v]) continue;
      (nbrs[v].size() == 1 ? leaves : rest).push_back(v);
    }
    if (!leaves.empty()) {
      for (int v : leaves) push_todo(v);
    } else if (!rest.empty()) {
      push_todo(rest[rng.next_below(rest.size())]);
    }
  };

  std::vector<int> order;
  int remaining = m.num_vars() - static_cast<int>(presets.size());
  while (remaining > 0) {
    if (todo.empty()) reseed();
    // Weight of a candidate: total size of the sampled branches adjacent
    // to it; the smallest weight wins, ties broken at random.
    long best_w = -1;
    std::vector<std::size_t> arg;
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const int v = todo[i];
      std::set<int> roots;
      for (int q : nbrs[v])
        if (sampled[q]) roots.insert(branches.find(q));
      long w = 0;
      for (int r : roots) w += branches.size[r];
      if (best_w < 0 || w < best_w) {
        best_w = w;
        arg.clear();
      }
      if (w == best_w) arg.push_back(i);
    }
    const std::size_t pick = arg[arg.size() == 1 ? 0 : rng.next_below(arg.size())];
    const int v = todo[pick];
    todo.erase(todo.begin() + static_cast<long>(pick));
    in_todo[v] = 0;
    order.push_back(v);
    sampled[v] = 1;
    for (int q : nbrs[v]) {
      if (sampled[q]) branches.unite(v, q);
      push_todo(q);
    }
    --remaining;
  }
  return plan_from_order(m, nbrs, order, presets);
}

namespace {

// Draws one coordinate by inverting the conditional CDF in log space.
class StepSampler {
 public:
  explicit StepSampler(const SamplingStep& step)
      : step_(step) {
    if (step_.engine) {
      ws_ = step_.engine->make_workspace();
      local_u_.resize(step_.engine->model().num_vars());
      diff_.resize(step_.engine->model().num_vars());
    }
  }

  double draw(const std::vector<double>& u, double k) {
    const double total_exp =
        step_.exponent * static_cast<double>(step_.extra_factors);
    if (!step_.engine) {
      // Fresh branch: the copula-space marginal is uniform, u = k exactly.
      return k;
    }
    std::fill(local_u_.begin(), local_u_.end(), 1.0);
    std::fill(diff_.begin(), diff_.end(), 0);
    for (int i : step_.local_branch) diff_[i] = 1;
    for (std::size_t i = 0; i < step_.local_vars.size(); ++i)
      if (diff_[i]) local_u_[i] = u[step_.local_vars[i]];

    const CdnModel& sub = step_.engine->model();
    local_u_[step_.local_var] = 1.0;
    const EvalPoint den_point = eval_point_from_u(sub, local_u_, diff_);
    const SignedLog den = step_.engine->evaluate(ws_, den_point);
    if (den.is_zero() || den.sign < 0) return k;  // degenerate tail guard
    const double log_den = den.log_abs;
    const double log_k = std::log(k);

    // A huge finite sentinel keeps Brent's interpolation arithmetic finite
    // where the conditional CDF underflows to zero near the left edge.
    constexpr double kUnderflow = -1e300;
    const auto g = [&](double cand) {
      local_u_[step_.local_var] = cand;
      const EvalPoint p = eval_point_from_u(sub, local_u_, diff_);
      const SignedLog num = step_.engine->evaluate(ws_, p);
      if (num.is_zero() || num.sign < 0) return kUnderflow;
      return total_exp * std::log(cand) + num.log_abs - log_den - log_k;
    };

    const double lo = 1e-12;
    const double hi = 1.0 - 1e-12;
    if (g(lo) >= 0.0) return lo;
    if (g(hi) <= 0.0) return hi;
    return brent_root(g, lo, hi, 1e-12, 200).root;
  }

 private:
  const SamplingStep& step_;
  DspEngine::Workspace ws_;
  std::vector<double> local_u_;
  std::vector<char> diff_;
};

}  // namespace

std::vector<std::vector<double>> sample_cdn_copula(
    const CdnModel& m, const SamplingPlan& plan, int count,
    std::uint64_t seed, const std::vector<double>& preset_u) {
  if (preset_u.size() != plan.preset_vars.size())
    throw InvalidSpec("preset value count does not match the plan");
  Rng rng(seed);
  std::vector<StepSampler> samplers;
  samplers.reserve(plan.steps.size());
  for (const auto& s : plan.steps) samplers.emplace_back(s);

  std::vector<std::vector<double>> rows(
      count, std::vector<double>(m.num_vars(), 0.0));
  for (auto& row : rows) {
    for (std::size_t i = 0; i < plan.preset_vars.size(); ++i)
      row[plan.preset_vars[i]] = preset_u[i];
    for (std::size_t s = 0; s < plan.steps.size(); ++s) {
      const double k = rng.next_open(0.0, 1.0);
      row[plan.steps[s].var] = samplers[s].draw(row, k);
    }
  }
  return rows;
}

std::vector<std::vector<double>> sample_cdn(const CdnModel& m,
                                            const SamplingPlan& plan,
                                            int count, std::uint64_t seed) {
  auto rows = sample_cdn_copula(m, plan, count, seed);
  for (auto& row : rows)
    for (int i = 0; i < m.num_vars(); ++i)
      row[i] = m.variables[i].margin.quantile(row[i]);
  return rows;
}

std::vector<std::vector<double>> sample_conditional_copula(
    const CdnModel& m, const std::vector<std::pair<int, double>>& observed_u,
    int count, std::uint64_t seed) {
  std::vector<int> presets;
  std::vector<double> values;
  for (const auto& [v, u] : observed_u) {
    presets.push_back(v);
    values.push_back(u);
  }
  const SamplingPlan plan =
      make_sampling_cliques(m, Rng::substream(seed, 0).next_u64(), presets);
  return sample_cdn_copula(m, plan, count,
                           Rng::substream(seed, 1).next_u64(), values);
}

std::vector<std::vector<double>> sample_conditional(
    const CdnModel& m, const std::vector<std::pair<int, double>>& observed_x,
    int count, std::uint64_t seed) {
  std::vector<std::pair<int, double>> observed_u;
  observed_u.reserve(observed_x.size());
  for (const auto& [v, x] : observed_x)
    observed_u.emplace_back(v, to_copula_coord(m.variables[v].margin, x));
  auto rows = sample_conditional_copula(m, observed_u, count, seed);
  for (auto& row : rows)
    for (int i = 0; i < m.num_vars(); ++i)
      row[i] = m.variables[i].margin.quantile(row[i]);
  // Observed coordinates return exactly as given.
  for (auto& row : rows)
    for (const auto& [v, x] : observed_x) row[v] = x;
  return rows;
}

}  // namespace cdn
