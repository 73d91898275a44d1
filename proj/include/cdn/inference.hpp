#pragma once

#include <cstdint>
#include <vector>

#include "cdn/cliquetree.hpp"
#include "cdn/model.hpp"
#include "cdn/signed_log.hpp"

namespace cdn {

// Derivative-sum-product message passing over a clique tree. A pass computes
// the mixed partial derivative of the factor product with respect to the
// scale coordinates of the differentiated variables, at the given point.
//
// The dynamic programs (partial messages over incoming-neighbor prefixes and
// partial factor derivatives over within-clique factor prefixes) are
// evaluated top down with explicit work stacks and memo tables, skipping any
// term whose factor partial or message entry is exactly zero.
//
// The same machinery runs on two value types: SignedLog (the default) and
// plain double (used by the log-space integrity checks), so the arithmetic
// is written once against a small policy.
class DspEngine {
 public:
  DspEngine(CdnModel model, CliqueTree tree);

  const CdnModel& model() const { return model_; }
  const CliqueTree& tree() const { return tree_; }
  int factor_home(int f) const { return factor_home_[f]; }

  // Swap factor parameters in place. The message plan depends only on the
  // structure, so optimizers reuse one engine across evaluations.
  void set_params(const std::vector<double>& params) {
    for (std::size_t f = 0; f < params.size(); ++f)
      model_.factors[f].param = params[f];
  }

  template <class V>
  struct WorkspaceT {
    const EvalPoint* point = nullptr;
    // Factor partials, cached per (factor, slot mask) for the current point.
    std::vector<std::vector<SignedLog>> fval;
    std::vector<std::vector<char>> fval_done;
    // Parameter partials of factors, filled lazily during gradient passes.
    std::vector<std::vector<SignedLog>> fpar;
    std::vector<std::vector<char>> fpar_done;
    // Message tables per directed edge, indexed by sepset-subset.
    std::vector<std::vector<V>> msg;
    std::vector<char> msg_done;
    // Partial-message memos per (clique, excluded-neighbor slot).
    std::vector<std::vector<V>> delta;
    std::vector<std::vector<char>> delta_done;
    // Partial-factor-derivative memos per clique.
    std::vector<std::vector<V>> mu;
    std::vector<std::vector<char>> mu_done;
    // Scratch tables reused by the factor-swap evaluations of the gradient.
    std::vector<V> mu_swap;
    std::vector<char> mu_swap_done;
    std::vector<V> delta_swap;
    std::vector<char> delta_swap_done;
    // Per-clique local differentiation masks for the current point.
    std::vector<std::uint32_t> ldiff;
    int message_sets = 0;
    bool calibrated = false;
  };
  using Workspace = WorkspaceT<SignedLog>;

  Workspace make_workspace() const;

  // Forward pass toward the component roots; returns the ln of the mixed
  // partial of the full factor product (chain constants are the caller's).
  SignedLog evaluate(Workspace& ws, const EvalPoint& p) const;
  SignedLog evaluate(const EvalPoint& p) const;

  // Same pass in linear arithmetic; may under- or overflow by design.
  double evaluate_linear(const EvalPoint& p) const;

  // Computes both directions of every edge; afterwards root_value is the
  // component's derivative value from any clique of that component.
  void calibrate(Workspace& ws, const EvalPoint& p) const;
  SignedLog root_value(Workspace& ws, int clique) const;

  // Product over the forest components, valid after a forward pass or a
  // calibration of the workspace.
  SignedLog full_value(Workspace& ws) const;

  // Root evaluation at factor_home(f) with factor f's argument partials
  // replaced by its parameter partials. Requires a calibrated workspace.
  SignedLog swapped_root_value(Workspace& ws, int f) const;

  // d ln(derivative value) / d theta_f for every factor, from one
  // calibration of the workspace.
  std::vector<double> log_param_gradient(Workspace& ws) const;

 private:
  struct Neighbor {
    int clique;
    int in_msg;   // edge id neighbor -> this
    int out_msg;  // edge id this -> neighbor
    std::uint32_t sep_mask;  // sepset positions in this clique's local bits
    int sep_bits;
  };
  struct CliquePlan {
    std::vector<int> vars;  // sorted global ids
    int nbits = 0;
    std::vector<int> factors;
    std::vector<std::uint32_t> factor_mask;        // local scope masks
    std::vector<std::vector<int>> slot_of_local;   // [fi][local bit] -> slot
    std::vector<Neighbor> nbrs;
    int child_slot = -1;  // slot of the downstream neighbor, -1 at roots
  };

  template <class V>
  friend struct PassRunner;

  CdnModel model_;
  CliqueTree tree_;
  std::vector<CliquePlan> plan_;
  std::vector<int> factor_home_;
  std::vector<int> roots_;
  int num_edges_ = 0;             // directed edges
  std::vector<int> edge_bits_;    // sepset size per directed edge
  // Flattened (clique, target) table base indices; target slot nbrs.size()
  // means no neighbor excluded (root evaluation).
  std::vector<int> target_base_;
  int num_targets_ = 0;
};

// Evidence-driven query: reduce, forward pass, chain constant. The result is
// a log density for point evidence, a log probability for pure cumulative
// evidence, and the mixed form otherwise.
SignedLog log_query(const DspEngine& eng, const Evidence& e);

// Probability-scale convenience for CDF-type queries, clamped to [0,1].
double cdf_query(const DspEngine& eng, const Evidence& e);

// ln f(x): every variable at a point value.
SignedLog log_density(const DspEngine& eng, const std::vector<double>& x);

}  // namespace cdn
