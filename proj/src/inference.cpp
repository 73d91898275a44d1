#include "cdn/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace cdn {

namespace {

std::uint32_t compress_mask(std::uint32_t b, std::uint32_t mask) {
  std::uint32_t out = 0;
  int j = 0;
  while (mask) {
    const std::uint32_t bit = mask & (~mask + 1);
    if (b & bit) out |= 1u << j;
    ++j;
    mask &= mask - 1;
  }
  return out;
}

std::uint32_t expand_mask(std::uint32_t s, std::uint32_t mask) {
  std::uint32_t out = 0;
  int j = 0;
  while (mask) {
    const std::uint32_t bit = mask & (~mask + 1);
    if ((s >> j) & 1u) out |= bit;
    ++j;
    mask &= mask - 1;
  }
  return out;
}

struct LogPolicy {
  using V = SignedLog;
  static V zero() { return SignedLog::zero(); }
  static V one() { return SignedLog::one(); }
  static V mul(const V& a, const V& b) { return a * b; }
  static V add(const V& a, const V& b) { return a + b; }
  static bool is_zero(const V& v) { return v.is_zero(); }
  static V from_factor(const SignedLog& f) { return f; }
};

struct LinearPolicy {
  using V = double;
  static V zero() { return 0.0; }
  static V one() { return 1.0; }
  static V mul(V a, V b) { return a * b; }
  static V add(V a, V b) { return a + b; }
  static bool is_zero(V v) { return v == 0.0; }
  static V from_factor(const SignedLog& f) { return f.to_linear(); }
};

}  // namespace

// Runs forward/calibration passes for one value policy over a workspace.
template <class Policy>
struct PassRunner {
  using V = typename Policy::V;

  const DspEngine& eng;
  DspEngine::WorkspaceT<V>& ws;
  std::vector<std::pair<std::uint32_t, int>> stack;

  void prepare(const EvalPoint& p) {
    ws.point = &p;
    for (auto& d : ws.fval_done) std::fill(d.begin(), d.end(), 0);
    for (auto& d : ws.fpar_done) std::fill(d.begin(), d.end(), 0);
    std::fill(ws.msg_done.begin(), ws.msg_done.end(), 0);
    for (auto& d : ws.delta_done) std::fill(d.begin(), d.end(), 0);
    for (auto& d : ws.mu_done) std::fill(d.begin(), d.end(), 0);
    ws.message_sets = 0;
    ws.calibrated = false;
    const int nc = eng.tree_.num_cliques();
    ws.ldiff.assign(nc, 0);
    for (int c = 0; c < nc; ++c) {
      const auto& cp = eng.plan_[c];
      for (int i = 0; i < cp.nbits; ++i)
        if (p.diff[cp.vars[i]]) ws.ldiff[c] |= 1u << i;
    }
  }

  SignedLog factor_partial(int f, std::uint32_t slot_mask) {
    if (ws.fval_done[f][slot_mask]) return ws.fval[f][slot_mask];
    const CopulaFactor& fac = eng.model_.factors[f];
    const EvalPoint& p = *ws.point;
    SignedLog val;
    if (fac.kind == CopulaKind::normal_pair) {
      val = normal_pair_log_partial(NormalPairCopula{fac.param},
                                    p.w[fac.scope[0]], p.w[fac.scope[1]],
                                    slot_mask);
    } else {
      std::vector<double> args(fac.scope.size());
      for (std::size_t s = 0; s < fac.scope.size(); ++s)
        args[s] = p.v[fac.scope[s]];
      val = clayton_log_partial(
          ClaytonCopula{fac.param, static_cast<int>(fac.scope.size())}, args,
          slot_mask);
      // Differentiated slots on probit-scale variables pick up dv/dw.
      for (std::size_t s = 0; s < fac.scope.size(); ++s)
        if (((slot_mask >> s) & 1u) && eng.model_.probit_scale[fac.scope[s]])
          val *= SignedLog::from_log(std_normal_log_pdf(p.w[fac.scope[s]]));
    }
    ws.fval[f][slot_mask] = val;
    ws.fval_done[f][slot_mask] = 1;
    return val;
  }

  SignedLog factor_param_partial(int f, std::uint32_t slot_mask) {
    if (ws.fpar_done[f][slot_mask]) return ws.fpar[f][slot_mask];
    const CopulaFactor& fac = eng.model_.factors[f];
    const EvalPoint& p = *ws.point;
    SignedLog val;
    if (fac.kind == CopulaKind::normal_pair) {
      val = normal_pair_log_param_partial(NormalPairCopula{fac.param},
                                          p.w[fac.scope[0]],
                                          p.w[fac.scope[1]], slot_mask);
    } else {
      std::vector<double> args(fac.scope.size());
      for (std::size_t s = 0; s < fac.scope.size(); ++s)
        args[s] = p.v[fac.scope[s]];
      val = clayton_log_param_partial(
          ClaytonCopula{fac.param, static_cast<int>(fac.scope.size())}, args,
          slot_mask);
      for (std::size_t s = 0; s < fac.scope.size(); ++s)
        if (((slot_mask >> s) & 1u) && eng.model_.probit_scale[fac.scope[s]])
          val *= SignedLog::from_log(std_normal_log_pdf(p.w[fac.scope[s]]));
    }
    ws.fpar[f][slot_mask] = val;
    ws.fpar_done[f][slot_mask] = 1;
    return val;
  }

  // Partial factor derivatives within clique c: mu(A, q) combines the first
  // q factors by the subset product rule. swap_f's argument partials are
  // replaced by its parameter partials when requested.
  V mu_value(int c, std::uint32_t a0, int swap_f, std::vector<V>& tbl,
             std::vector<char>& done) {
    const auto& cp = eng.plan_[c];
    const std::uint32_t width = 1u << cp.nbits;
    const int nf = static_cast<int>(cp.factors.size());
    const auto idx = [width](std::uint32_t a, int q) {
      return static_cast<std::size_t>(q) * width + a;
    };
    if (done[idx(a0, nf)]) return tbl[idx(a0, nf)];
    std::vector<std::pair<std::uint32_t, int>> st{{a0, nf}};
    while (!st.empty()) {
      const auto [a, q] = st.back();
      if (done[idx(a, q)]) {
        st.pop_back();
        continue;
      }
      if (q == 0) {
        tbl[idx(a, 0)] = a == 0 ? Policy::one() : Policy::zero();
        done[idx(a, 0)] = 1;
        st.pop_back();
        continue;
      }
      const int f = cp.factors[q - 1];
      const std::uint32_t fmask = cp.factor_mask[q - 1];
      const std::uint32_t as = a & fmask;
      bool ready = true;
      for (std::uint32_t b = as;; b = (b - 1) & as) {
        if (!done[idx(a & ~b, q - 1)]) {
          st.push_back({a & ~b, q - 1});
          ready = false;
        }
        if (b == 0) break;
      }
      if (!ready) continue;
      V acc = Policy::zero();
      for (std::uint32_t b = as;; b = (b - 1) & as) {
        const V rest = tbl[idx(a & ~b, q - 1)];
        if (!Policy::is_zero(rest)) {
          std::uint32_t slot_mask = 0;
          std::uint32_t bb = b;
          while (bb) {
            const int local = std::countr_zero(bb);
            slot_mask |= 1u << cp.slot_of_local[q - 1][local];
            bb &= bb - 1;
          }
          const SignedLog raw = swap_f == f
                                    ? factor_param_partial(f, slot_mask)
                                    : factor_partial(f, slot_mask);
          const V fv = Policy::from_factor(raw);
          if (!Policy::is_zero(fv)) acc = Policy::add(acc, Policy::mul(fv, rest));
        }
        if (b == 0) break;
      }
      tbl[idx(a, q)] = acc;
      done[idx(a, q)] = 1;
      st.pop_back();
    }
    return tbl[idx(a0, nf)];
  }

  // Partial messages: delta(A, p) convolves the first p incoming messages
  // with the within-clique factor derivatives.
  V delta_value(int c, const std::vector<int>& incoming, std::uint32_t a0,
                int swap_f, std::vector<V>& dtbl, std::vector<char>& ddone,
                std::vector<V>& mtbl, std::vector<char>& mdone) {
    const auto& cp = eng.plan_[c];
    const std::uint32_t width = 1u << cp.nbits;
    const int np = static_cast<int>(incoming.size());
    const auto idx = [width](std::uint32_t a, int p) {
      return static_cast<std::size_t>(p) * width + a;
    };
    if (ddone[idx(a0, np)]) return dtbl[idx(a0, np)];
    stack.clear();
    stack.push_back({a0, np});
    while (!stack.empty()) {
      const auto [a, p] = stack.back();
      if (ddone[idx(a, p)]) {
        stack.pop_back();
        continue;
      }
      if (p == 0) {
        dtbl[idx(a, 0)] = mu_value(c, a, swap_f, mtbl, mdone);
        ddone[idx(a, 0)] = 1;
        stack.pop_back();
        continue;
      }
      const auto& nb = cp.nbrs[incoming[p - 1]];
      const std::uint32_t as = a & nb.sep_mask;
      bool ready = true;
      for (std::uint32_t b = as;; b = (b - 1) & as) {
        if (!ddone[idx(a & ~b, p - 1)]) {
          stack.push_back({a & ~b, p - 1});
          ready = false;
        }
        if (b == 0) break;
      }
      if (!ready) continue;
      V acc = Policy::zero();
      const std::vector<V>& mt = ws.msg[nb.in_msg];
      for (std::uint32_t b = as;; b = (b - 1) & as) {
        const V& mv = mt[compress_mask(b, nb.sep_mask)];
        if (!Policy::is_zero(mv)) {
          const V& dv = dtbl[idx(a & ~b, p - 1)];
          if (!Policy::is_zero(dv)) acc = Policy::add(acc, Policy::mul(mv, dv));
        }
        if (b == 0) break;
      }
      dtbl[idx(a, p)] = acc;
      ddone[idx(a, p)] = 1;
      stack.pop_back();
    }
    return dtbl[idx(a0, np)];
  }

  std::vector<int> incoming_for(int c, int excluded_slot) const {
    const auto& cp = eng.plan_[c];
    std::vector<int> in;
    in.reserve(cp.nbrs.size());
    for (int s = 0; s < static_cast<int>(cp.nbrs.size()); ++s)
      if (s != excluded_slot) in.push_back(s);
    return in;
  }

  void run_message(int c, int target_slot) {
    const auto& cp = eng.plan_[c];
    const auto& nb = cp.nbrs[target_slot];
    if (ws.msg_done[nb.out_msg]) return;
    const std::vector<int> incoming = incoming_for(c, target_slot);
    const int ct = eng.target_base_[c] + target_slot;
    const std::uint32_t base = ws.ldiff[c] & ~nb.sep_mask;
    std::vector<V>& out = ws.msg[nb.out_msg];
    for (std::uint32_t s = 0; s < (1u << nb.sep_bits); ++s) {
      const std::uint32_t blocal = expand_mask(s, nb.sep_mask);
      if (blocal & ~ws.ldiff[c]) {
        out[s] = Policy::zero();  // touches a non-differentiated variable
        continue;
      }
      out[s] = delta_value(c, incoming, blocal | base, -1, ws.delta[ct],
                           ws.delta_done[ct], ws.mu[c], ws.mu_done[c]);
    }
    ws.msg_done[nb.out_msg] = 1;
    ++ws.message_sets;
  }

  V clique_root_value(int c, int swap_f) {
    const auto& cp = eng.plan_[c];
    const std::vector<int> incoming = incoming_for(c, -1);
    if (swap_f < 0) {
      const int ct = eng.target_base_[c] + static_cast<int>(cp.nbrs.size());
      return delta_value(c, incoming, ws.ldiff[c], -1, ws.delta[ct],
                         ws.delta_done[ct], ws.mu[c], ws.mu_done[c]);
    }
    const std::uint32_t width = 1u << cp.nbits;
    ws.delta_swap.assign((incoming.size() + 1) * width, Policy::zero());
    ws.delta_swap_done.assign((incoming.size() + 1) * width, 0);
    ws.mu_swap.assign((cp.factors.size() + 1) * width, Policy::zero());
    ws.mu_swap_done.assign((cp.factors.size() + 1) * width, 0);
    return delta_value(c, incoming, ws.ldiff[c], swap_f, ws.delta_swap,
                       ws.delta_swap_done, ws.mu_swap, ws.mu_swap_done);
  }

  V forward(const EvalPoint& p) {
    prepare(p);
    for (int c : eng.tree_.topo_order)
      if (eng.plan_[c].child_slot >= 0) run_message(c, eng.plan_[c].child_slot);
    V result = Policy::one();
    for (int r : eng.roots_)
      result = Policy::mul(result, clique_root_value(r, -1));
    return result;
  }

  void calibrate(const EvalPoint& p) {
    forward(p);
    for (auto it = eng.tree_.topo_order.rbegin();
         it != eng.tree_.topo_order.rend(); ++it) {
      const int c = *it;
      const auto& cp = eng.plan_[c];
      for (int s = 0; s < static_cast<int>(cp.nbrs.size()); ++s)
        if (s != cp.child_slot) run_message(c, s);
    }
    ws.calibrated = true;
  }
};

DspEngine::DspEngine(CdnModel model, CliqueTree tree)
    : model_(std::move(model)), tree_(std::move(tree)) {
  const int nc = tree_.num_cliques();
  plan_.resize(nc);
  factor_home_.assign(model_.num_factors(), -1);
  for (int c = 0; c < nc; ++c) {
    CliquePlan& cp = plan_[c];
    cp.vars = tree_.cliques[c].vars;
    cp.nbits = static_cast<int>(cp.vars.size());
    cp.factors = tree_.cliques[c].factors;
    for (std::size_t fi = 0; fi < cp.factors.size(); ++fi) {
      const int f = cp.factors[fi];
      factor_home_[f] = c;
      const std::vector<int>& scope = model_.factors[f].scope;
      std::uint32_t mask = 0;
      std::vector<int> slot_of_local(cp.nbits, -1);
      for (std::size_t slot = 0; slot < scope.size(); ++slot) {
        const auto it =
            std::lower_bound(cp.vars.begin(), cp.vars.end(), scope[slot]);
        const int local = static_cast<int>(it - cp.vars.begin());
        mask |= 1u << local;
        slot_of_local[local] = static_cast<int>(slot);
      }
      cp.factor_mask.push_back(mask);
      cp.slot_of_local.push_back(std::move(slot_of_local));
    }
  }
  // Directed edges: 2e toward the child, 2e+1 back.
  int undirected = 0;
  for (int c = 0; c < nc; ++c) {
    const int ch = tree_.child[c];
    if (ch < 0) {
      roots_.push_back(c);
      continue;
    }
    const int fwd = 2 * undirected;
    const int rev = 2 * undirected + 1;
    ++undirected;
    const std::vector<int>& sep = tree_.sepsets[c];
    const auto local_mask = [&](int clique) {
      std::uint32_t m = 0;
      for (int v : sep) {
        const auto it = std::lower_bound(plan_[clique].vars.begin(),
                                         plan_[clique].vars.end(), v);
        m |= 1u << static_cast<int>(it - plan_[clique].vars.begin());
      }
      return m;
    };
    const int bits = static_cast<int>(sep.size());
    plan_[c].child_slot = static_cast<int>(plan_[c].nbrs.size());
    plan_[c].nbrs.push_back({ch, rev, fwd, local_mask(c), bits});
    plan_[ch].nbrs.push_back({c, fwd, rev, local_mask(ch), bits});
    edge_bits_.push_back(bits);
    edge_bits_.push_back(bits);
  }
  num_edges_ = 2 * undirected;
  target_base_.resize(nc);
  num_targets_ = 0;
  for (int c = 0; c < nc; ++c) {
    target_base_[c] = num_targets_;
    num_targets_ += static_cast<int>(plan_[c].nbrs.size()) + 1;
  }
}

namespace {

template <class V>
void size_workspace(const CdnModel& model,
                    const std::vector<int>& edge_bits, int num_targets,
                    DspEngine::WorkspaceT<V>& ws) {
  const int nf = model.num_factors();
  ws.fval.resize(nf);
  ws.fval_done.resize(nf);
  ws.fpar.resize(nf);
  ws.fpar_done.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const std::size_t n = 1u << model.factors[f].scope.size();
    ws.fval[f].resize(n);
    ws.fval_done[f].assign(n, 0);
    ws.fpar[f].resize(n);
    ws.fpar_done[f].assign(n, 0);
  }
  ws.msg.resize(edge_bits.size());
  for (std::size_t e = 0; e < edge_bits.size(); ++e)
    ws.msg[e].resize(1u << edge_bits[e]);
  ws.msg_done.assign(edge_bits.size(), 0);
  ws.delta.resize(num_targets);
  ws.delta_done.resize(num_targets);
  ws.mu.clear();
  ws.mu_done.clear();
}

}  // namespace

DspEngine::Workspace DspEngine::make_workspace() const {
  Workspace ws;
  size_workspace(model_, edge_bits_, num_targets_, ws);
  const int nc = tree_.num_cliques();
  ws.mu.resize(nc);
  ws.mu_done.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const CliquePlan& cp = plan_[c];
    const std::size_t width = 1u << cp.nbits;
    ws.mu[c].assign((cp.factors.size() + 1) * width, SignedLog::zero());
    ws.mu_done[c].assign((cp.factors.size() + 1) * width, 0);
    for (int t = 0; t <= static_cast<int>(cp.nbrs.size()); ++t) {
      const int incoming =
          static_cast<int>(cp.nbrs.size()) - (t < static_cast<int>(cp.nbrs.size()) ? 1 : 0);
      ws.delta[target_base_[c] + t].assign((incoming + 1) * width,
                                           SignedLog::zero());
      ws.delta_done[target_base_[c] + t].assign((incoming + 1) * width, 0);
    }
  }
  return ws;
}

SignedLog DspEngine::evaluate(Workspace& ws, const EvalPoint& p) const {
  PassRunner<LogPolicy> runner{*this, ws, {}};
  return runner.forward(p);
}

SignedLog DspEngine::evaluate(const EvalPoint& p) const {
  Workspace ws = make_workspace();
  return evaluate(ws, p);
}

double DspEngine::evaluate_linear(const EvalPoint& p) const {
  WorkspaceT<double> ws;
  size_workspace(model_, edge_bits_, num_targets_, ws);
  const int nc = tree_.num_cliques();
  ws.mu.resize(nc);
  ws.mu_done.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const CliquePlan& cp = plan_[c];
    const std::size_t width = 1u << cp.nbits;
    ws.mu[c].assign((cp.factors.size() + 1) * width, 0.0);
    ws.mu_done[c].assign((cp.factors.size() + 1) * width, 0);
    for (int t = 0; t <= static_cast<int>(cp.nbrs.size()); ++t) {
      const int incoming =
          static_cast<int>(cp.nbrs.size()) - (t < static_cast<int>(cp.nbrs.size()) ? 1 : 0);
      ws.delta[target_base_[c] + t].assign((incoming + 1) * width, 0.0);
      ws.delta_done[target_base_[c] + t].assign((incoming + 1) * width, 0);
    }
  }
  PassRunner<LinearPolicy> runner{*this, ws, {}};
  return runner.forward(p);
}

void DspEngine::calibrate(Workspace& ws, const EvalPoint& p) const {
  PassRunner<LogPolicy> runner{*this, ws, {}};
  runner.calibrate(p);
}

SignedLog DspEngine::root_value(Workspace& ws, int clique) const {
  PassRunner<LogPolicy> runner{*this, ws, {}};
  return runner.clique_root_value(clique, -1);
}

SignedLog DspEngine::full_value(Workspace& ws) const {
  PassRunner<LogPolicy> runner{*this, ws, {}};
  SignedLog result = SignedLog::one();
  for (int r : roots_) result *= runner.clique_root_value(r, -1);
  return result;
}

SignedLog DspEngine::swapped_root_value(Workspace& ws, int f) const {
  PassRunner<LogPolicy> runner{*this, ws, {}};
  return runner.clique_root_value(factor_home_[f], f);
}

std::vector<double> DspEngine::log_param_gradient(Workspace& ws) const {
  if (!ws.calibrated)
    throw ScheduleViolation("gradient requested on an uncalibrated workspace");
  PassRunner<LogPolicy> runner{*this, ws, {}};
  std::vector<double> grad(model_.num_factors());
  for (int f = 0; f < model_.num_factors(); ++f) {
    const int c = factor_home_[f];
    const SignedLog value = runner.clique_root_value(c, -1);
    const SignedLog swapped = runner.clique_root_value(c, f);
    grad[f] = (swapped / value).to_linear();
  }
  return grad;
}

SignedLog log_query(const DspEngine& eng, const Evidence& e) {
  const EvalPoint p = reduce(eng.model(), e);
  const SignedLog value = eng.evaluate(p);
  return value * SignedLog::from_log(p.log_kappa);
}

double cdf_query(const DspEngine& eng, const Evidence& e) {
  const SignedLog v = log_query(eng, e);
  if (v.is_zero() || v.sign < 0) return 0.0;
  return std::min(1.0, std::exp(v.log_abs));
}

SignedLog log_density(const DspEngine& eng, const std::vector<double>& x) {
  Evidence e;
  e.entries.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    e.entries[i] = {VarState::point, x[i]};
  return log_query(eng, e);
}

}  // namespace cdn
