#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cdn/cliquetree.hpp"
#include "cdn/inference.hpp"
#include "cdn/model.hpp"

namespace cdn {

enum class ObsState : char { observed = 0, missing = 1, censored = 2 };

// Rows of real-space observations. state is either empty (fully observed)
// or an m x n matrix of ObsState values; a censored entry's x value is the
// known upper bound.
struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<std::vector<char>> state;

  int rows() const { return static_cast<int>(x.size()); }
  int cols() const { return x.empty() ? 0 : static_cast<int>(x[0].size()); }
  ObsState state_of(int row, int col) const {
    return state.empty() ? ObsState::observed
                         : static_cast<ObsState>(state[row][col]);
  }
};

struct OptimizerConfig {
  double epsilon = 1e-8;
  int max_iter = 100;
  double alpha = 0.001;
  double beta = 0.9;
  int lbfgs_memory = 10;
  double barrier_t0 = 1.0;
  double barrier_mu = 10.0;
  int restarts = 3;
  std::uint64_t seed = 0;
};

// Throws InvalidSpec when alpha is outside (0, 0.5), beta outside (0,1), or
// epsilon is not positive.
void validate(const OptimizerConfig& cfg);

struct LearnReport {
  std::vector<double> theta;
  std::vector<double> energy_trace;  // accepted objective values
  double energy = 0.0;
  int iterations = 0;
  int restarts = 0;  // history restarts (L-BFGS) or random restarts (fit)
  bool converged = false;
  std::string reason;
  std::string method;
};

// Mean negative copula log-likelihood over a dataset, with the per-sample
// copula-space points precomputed once (they do not depend on the copula
// parameters under two-stage estimation). Missing coordinates enter as
// argument 1 and are not differentiated; censored coordinates are fixed at
// their bound's copula coordinate and not differentiated.
class EnergyEvaluator {
 public:
  EnergyEvaluator(CdnModel model, const Dataset& data);

  int num_params() const { return engine_.model().num_factors(); }
  int num_samples() const { return static_cast<int>(points_.size()); }
  const CdnModel& model() const { return engine_.model(); }
  const DspEngine& engine() const { return engine_; }
  const std::vector<ParamInterval>& domains() const { return domains_; }
  const std::vector<std::vector<double>>& u_rows() const { return u_rows_; }
  const std::vector<std::vector<char>>& diff_rows() const {
    return diff_rows_;
  }

  // +inf when theta leaves the open parameter domains.
  double energy(const std::vector<double>& theta);
  double energy_and_grad(const std::vector<double>& theta,
                         std::vector<double>& grad);

  // Per-sample copula log-likelihood and its parameter gradient, from one
  // calibration of the workspace.
  std::pair<SignedLog, std::vector<double>> grad_loglik(
      const std::vector<double>& theta, int sample);

 private:
  bool in_domain(const std::vector<double>& theta) const;

  DspEngine engine_;
  std::vector<EvalPoint> points_;
  std::vector<std::vector<double>> u_rows_;
  std::vector<std::vector<char>> diff_rows_;
  std::vector<ParamInterval> domains_;
  std::vector<DspEngine::Workspace> pool_;
};

// Generic objective: returns the value; fills *grad when non-null.
using Objective =
    std::function<double(const std::vector<double>&, std::vector<double>*)>;

LearnReport gradient_descent(const Objective& f, std::vector<double> x0,
                             const OptimizerConfig& cfg);
LearnReport lbfgs_restart(const Objective& f, std::vector<double> x0,
                          const OptimizerConfig& cfg);
// Interior-point wrapper: log barriers over the open domains, t stepped by
// mu until constraints/t drops below epsilon, each stage warm-started.
LearnReport lbfgs_barrier(const Objective& f,
                          const std::vector<ParamInterval>& domains,
                          std::vector<double> x0, const OptimizerConfig& cfg);

LearnReport gradient_descent(EnergyEvaluator& ev, std::vector<double> x0,
                             const OptimizerConfig& cfg);
LearnReport lbfgs_restart(EnergyEvaluator& ev, std::vector<double> x0,
                          const OptimizerConfig& cfg);
LearnReport lbfgs_barrier(EnergyEvaluator& ev, std::vector<double> x0,
                          const OptimizerConfig& cfg);

// Factor-overlap structure for piecewise learning, one subproblem per
// factor: the factors sharing scope with it, a sub-model over their joint
// scope, and its clique tree.
struct ParameterGraph {
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> node_factors;  // focal factor first
  std::vector<CdnModel> submodels;
  std::vector<CliqueTree> trees;
  std::vector<std::vector<int>> local_vars;  // submodel local -> global var
};

ParameterGraph make_parameter_graph(const CdnModel& m);

// Composite-likelihood learning: each outer iteration optimizes every
// factor's parameter on its local differentiated product (variables outside
// the focal scope held at their observed cumulative coordinates), in an
// order shuffled per iteration.
LearnReport piecewise_learn(EnergyEvaluator& ev, std::vector<double> x0,
                            const OptimizerConfig& cfg);

enum class LearnMethod { gd, lbfgs_restart, lbfgs_barrier, piecewise };
LearnMethod learn_method_from_string(const std::string& s);
std::string to_string(LearnMethod m);

struct FitResult {
  CdnModel model;
  LearnReport report;
};

// Two-stage fit: margins by per-variable MLE over observed entries, then
// the chosen optimizer on the copula energy with random restarts (Clayton
// initialized through uniform Kendall tau, normal uniform on (0,1)).
FitResult fit(const CdnModel& structure, const Dataset& data,
              LearnMethod method, const OptimizerConfig& cfg);

// Deterministic chunked parallel map-reduce used for per-sample terms;
// thread count from CDN_THREADS (default: hardware concurrency).
int learn_thread_count();

}  // namespace cdn
