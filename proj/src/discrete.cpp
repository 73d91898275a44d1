#include "cdn/discrete.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "cdn/cliquetree.hpp"
#include "cdn/errors.hpp"
#include "cdn/margins.hpp"

namespace cdn {

DiscreteMargin bernoulli_margin(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ParamOutOfDomain("bernoulli parameter must lie in (0,1)");
  return {{0.0, 1.0}, {1.0 - p, 1.0}};
}

DiscreteMargin uniform_margin(int levels) {
  if (levels < 1) throw ParamOutOfDomain("uniform margin needs >= 1 level");
  DiscreteMargin m;
  for (int j = 0; j < levels; ++j) {
    m.values.push_back(static_cast<double>(j));
    m.cdf.push_back(static_cast<double>(j + 1) / levels);
  }
  return m;
}

double factor_cdf(const CopulaFactor& f, const std::vector<double>& v) {
  for (double x : v) {
    if (x <= 0.0) return 0.0;
  }
  if (f.kind == CopulaKind::normal_pair) {
    return binormal_cdf(std_normal_quantile(std::min(v[0], 1.0)),
                        std_normal_quantile(std::min(v[1], 1.0)), f.param);
  }
  const SignedLog c =
      clayton_log_partial(ClaytonCopula{f.param, static_cast<int>(v.size())},
                          v, 0);
  return c.to_linear();
}

namespace {

// Difference-variant workspace for one pmf evaluation. Memo keys pair the
// differenced subset A with a lower-position mask over the pinned local diff
// variables (bits outside A; set bit = lower step value).
struct DiffWorkspace {
  const CdnModel& model;
  const CliqueTree& tree;
  std::vector<double> v_lo;
  std::vector<double> v_hi;

  struct CliqueData {
    std::vector<int> vars;
    int nbits = 0;
    std::uint32_t diff_mask = 0;
    std::vector<int> factors;
    std::vector<std::uint32_t> factor_mask;
    std::vector<std::vector<int>> slot_of_local;
    // Incoming parent edges (clique, sep mask in local bits).
    std::vector<std::pair<int, std::uint32_t>> parents;
    int child = -1;
    std::uint32_t child_sep = 0;
    std::vector<double> mu;      // [(A,L,q)]
    std::vector<char> mu_done;
    std::vector<double> delta;   // [(A,L,p)]
    std::vector<char> delta_done;
  };
  std::vector<CliqueData> cliques;

  // Factor difference memos, keyed by (diff slots, lower slots).
  std::vector<std::vector<double>> fdiff;
  std::vector<std::vector<char>> fdiff_done;

  // Message tables per clique toward its child: (B, L) over sepset bits of
  // the child side are read through the parent list, so we store them on the
  // sender keyed by its own local (B, L) compressed over the sepset.
  std::vector<std::vector<double>> msg;

  explicit DiffWorkspace(const CdnModel& m, const CliqueTree& t)
      : model(m), tree(t) {}

  std::size_t mu_index(const CliqueData& c, std::uint32_t a, std::uint32_t l,
                       int q) const {
    const std::size_t plane = 1u << (2 * c.nbits);
    return static_cast<std::size_t>(q) * plane + (a << c.nbits) + l;
  }

  double factor_diff(int f, std::uint32_t diff_slots,
                     std::uint32_t low_slots) {
    const std::size_t arity = model.factors[f].scope.size();
    const std::size_t key = (diff_slots << arity) | low_slots;
    if (fdiff_done[f][key]) return fdiff[f][key];
    const CopulaFactor& fac = model.factors[f];
    std::vector<double> args(arity);
    double sum = 0.0;
    // Inclusion-exclusion over the corners of the differenced slots.
    for (std::uint32_t t = diff_slots;; t = (t - 1) & diff_slots) {
      for (std::size_t s = 0; s < arity; ++s) {
        const std::uint32_t bit = 1u << s;
        const int var = fac.scope[s];
        if (diff_slots & bit)
          args[s] = (t & bit) ? v_hi[var] : v_lo[var];
        else if (low_slots & bit)
          args[s] = v_lo[var];
        else
          args[s] = v_hi[var];
      }
      const int dropped = std::popcount(diff_slots & ~t);
      const double corner = factor_cdf(fac, args);
      sum += (dropped % 2 == 0) ? corner : -corner;
      if (t == 0) break;
    }
    fdiff[f][key] = sum;
    fdiff_done[f][key] = 1;
    return sum;
  }

  // Delta_A of the product of the first q factors of clique c, with local
  // diff vars outside A pinned (bit in l = lower).
  double mu_value(int c, std::uint32_t a0, std::uint32_t l0, int q0);

  // Delta_A of [first p parent subtrees] * [all local factors].
  double delta_value(int c, std::uint32_t a0, std::uint32_t l0, int p0);
};

double DiffWorkspace::mu_value(int c, std::uint32_t a0, std::uint32_t l0,
                               int q0) {
  CliqueData& cd = cliques[c];
  if (cd.mu_done[mu_index(cd, a0, l0, q0)])
    return cd.mu[mu_index(cd, a0, l0, q0)];
  struct Item {
    std::uint32_t a, l;
    int q;
  };
  std::vector<Item> st{{a0, l0, q0}};
  while (!st.empty()) {
    const auto [a, l, q] = st.back();
    const std::size_t here = mu_index(cd, a, l, q);
    if (cd.mu_done[here]) {
      st.pop_back();
      continue;
    }
    if (q == 0) {
      cd.mu[here] = a == 0 ? 1.0 : 0.0;
      cd.mu_done[here] = 1;
      st.pop_back();
      continue;
    }
    const std::uint32_t fmask = cd.factor_mask[q - 1];
    const std::uint32_t as = a & fmask;
    bool ready = true;
    for (std::uint32_t b = as;; b = (b - 1) & as) {
      // The peeled factor takes B; the rest keeps A\B with B pinned upper.
      if (!cd.mu_done[mu_index(cd, a & ~b, l, q - 1)]) {
        st.push_back({a & ~b, l, q - 1});
        ready = false;
      }
      if (b == 0) break;
    }
    if (!ready) continue;
    const int f = cd.factors[q - 1];
    double acc = 0.0;
    for (std::uint32_t b = as;; b = (b - 1) & as) {
      const double rest = cd.mu[mu_index(cd, a & ~b, l, q - 1)];
      if (rest != 0.0) {
        // Factor slots outside B sit lower when differenced by the rest
        // (vars in A\B) or pinned lower by the caller (vars in l).
        std::uint32_t diff_slots = 0;
        std::uint32_t low_slots = 0;
        std::uint32_t mm = fmask;
        while (mm) {
          const int local = std::countr_zero(mm);
          const std::uint32_t bit = 1u << local;
          const int slot = cd.slot_of_local[q - 1][local];
          if (b & bit)
            diff_slots |= 1u << slot;
          else if ((a & ~b & bit) || (l & bit))
            low_slots |= 1u << slot;
          mm &= mm - 1;
        }
        const double fv = factor_diff(f, diff_slots, low_slots);
        if (fv != 0.0) acc += fv * rest;
      }
      if (b == 0) break;
    }
    cd.mu[here] = acc;
    cd.mu_done[here] = 1;
    st.pop_back();
  }
  return cd.mu[mu_index(cd, a0, l0, q0)];
}

double DiffWorkspace::delta_value(int c, std::uint32_t a0, std::uint32_t l0,
                                  int p0) {
  CliqueData& cd = cliques[c];
  const std::size_t plane = 1u << (2 * cd.nbits);
  const auto idx = [&](std::uint32_t a, std::uint32_t l, int p) {
    return static_cast<std::size_t>(p) * plane + (a << cd.nbits) + l;
  };
  if (cd.delta_done[idx(a0, l0, p0)]) return cd.delta[idx(a0, l0, p0)];
  struct Item {
    std::uint32_t a, l;
    int p;
  };
  std::vector<Item> st{{a0, l0, p0}};
  while (!st.empty()) {
    const auto [a, l, p] = st.back();
    const std::size_t here = idx(a, l, p);
    if (cd.delta_done[here]) {
      st.pop_back();
      continue;
    }
    if (p == 0) {
      cd.delta[here] = mu_value(c, a, l, static_cast<int>(cd.factors.size()));
      cd.delta_done[here] = 1;
      st.pop_back();
      continue;
    }
    const auto [pc, sep] = cd.parents[p - 1];
    const std::uint32_t as = a & sep;
    bool ready = true;
    for (std::uint32_t b = as;; b = (b - 1) & as) {
      if (!cd.delta_done[idx(a & ~b, l, p - 1)]) {
        st.push_back({a & ~b, l, p - 1});
        ready = false;
      }
      if (b == 0) break;
    }
    if (!ready) continue;
    const CliqueData& pd = cliques[pc];
    double acc = 0.0;
    for (std::uint32_t b = as;; b = (b - 1) & as) {
      const double rest = cd.delta[idx(a & ~b, l, p - 1)];
      if (rest != 0.0) {
        // Translate (B over sep, pins) into the parent's local frame: the
        // parent subtree saw A\B shared vars at lower, caller pins as given.
        std::uint32_t pb = 0;
        std::uint32_t pl = 0;
        for (std::size_t j = 0; j < pd.vars.size(); ++j) {
          const int var = pd.vars[j];
          const auto it =
              std::lower_bound(cd.vars.begin(), cd.vars.end(), var);
          if (it == cd.vars.end() || *it != var) continue;
          const std::uint32_t cbit =
              1u << static_cast<int>(it - cd.vars.begin());
          if (!(sep & cbit)) continue;
          if (b & cbit)
            pb |= 1u << j;
          else if ((a & ~b & cbit) || (l & cbit))
            pl |= 1u << j;
        }
        const double mv = msg[pc][(pb << pd.nbits) | pl];
        if (mv != 0.0) acc += mv * rest;
      }
      if (b == 0) break;
    }
    cd.delta[here] = acc;
    cd.delta_done[here] = 1;
    st.pop_back();
  }
  return cd.delta[idx(a0, l0, p0)];
}

}  // namespace

double discrete_pmf(const CdnModel& m,
                    const std::vector<DiscreteMargin>& margins,
                    const std::vector<int>& point) {
  if (static_cast<int>(margins.size()) != m.num_vars() ||
      static_cast<int>(point.size()) != m.num_vars())
    throw OutOfSupport("margin or point length does not match the model");
  for (int i = 0; i < m.num_vars(); ++i) {
    if (point[i] < 0 || point[i] >= margins[i].support_size())
      throw OutOfSupport("point index out of support for variable " +
                         m.variables[i].name);
  }

  std::vector<std::vector<int>> scopes;
  scopes.reserve(m.factors.size());
  for (const auto& f : m.factors) scopes.push_back(f.scope);
  const CliqueTree tree = build_min_fill(scopes, m.num_vars());

  DiffWorkspace ws(m, tree);
  ws.v_lo.resize(m.num_vars());
  ws.v_hi.resize(m.num_vars());
  for (int i = 0; i < m.num_vars(); ++i) {
    const int j = point[i];
    const double u_lo = j == 0 ? 0.0 : margins[i].cdf[j - 1];
    const double u_hi = margins[i].cdf[j];
    ws.v_lo[i] = std::pow(u_lo, m.d[i]);
    ws.v_hi[i] = std::pow(u_hi, m.d[i]);
  }

  ws.fdiff.resize(m.num_factors());
  ws.fdiff_done.resize(m.num_factors());
  for (int f = 0; f < m.num_factors(); ++f) {
    const std::size_t n = 1u << (2 * m.factors[f].scope.size());
    ws.fdiff[f].assign(n, 0.0);
    ws.fdiff_done[f].assign(n, 0);
  }

  const int nc = tree.num_cliques();
  ws.cliques.resize(nc);
  ws.msg.resize(nc);
  for (int c = 0; c < nc; ++c) {
    auto& cd = ws.cliques[c];
    cd.vars = tree.cliques[c].vars;
    cd.nbits = static_cast<int>(cd.vars.size());
    cd.diff_mask = (1u << cd.nbits) - 1;  // a pmf differences every variable
    cd.factors = tree.cliques[c].factors;
    cd.child = tree.child[c];
    for (std::size_t fi = 0; fi < cd.factors.size(); ++fi) {
      const auto& scope = m.factors[cd.factors[fi]].scope;
      std::uint32_t mask = 0;
      std::vector<int> slot_of_local(cd.nbits, -1);
      for (std::size_t slot = 0; slot < scope.size(); ++slot) {
        const auto it =
            std::lower_bound(cd.vars.begin(), cd.vars.end(), scope[slot]);
        const int local = static_cast<int>(it - cd.vars.begin());
        mask |= 1u << local;
        slot_of_local[local] = static_cast<int>(slot);
      }
      cd.factor_mask.push_back(mask);
      cd.slot_of_local.push_back(std::move(slot_of_local));
    }
  }
  for (int c = 0; c < nc; ++c) {
    const int ch = tree.child[c];
    if (ch < 0) continue;
    std::uint32_t sender_sep = 0;
    std::uint32_t child_sep = 0;
    for (int v : tree.sepsets[c]) {
      const auto a = std::lower_bound(ws.cliques[c].vars.begin(),
                                      ws.cliques[c].vars.end(), v);
      sender_sep |= 1u << static_cast<int>(a - ws.cliques[c].vars.begin());
      const auto b = std::lower_bound(ws.cliques[ch].vars.begin(),
                                      ws.cliques[ch].vars.end(), v);
      child_sep |= 1u << static_cast<int>(b - ws.cliques[ch].vars.begin());
    }
    ws.cliques[c].child_sep = sender_sep;
    ws.cliques[ch].parents.push_back({c, child_sep});
  }
  for (int c = 0; c < nc; ++c) {
    auto& cd = ws.cliques[c];
    const std::size_t plane = 1u << (2 * cd.nbits);
    cd.mu.assign((cd.factors.size() + 1) * plane, 0.0);
    cd.mu_done.assign((cd.factors.size() + 1) * plane, 0);
    cd.delta.assign((cd.parents.size() + 1) * plane, 0.0);
    cd.delta_done.assign((cd.parents.size() + 1) * plane, 0);
  }

  // Forward pass: each clique differences its exclusive variables fully and
  // publishes a (B over sepset, lower-pin) table for the child.
  double result = 1.0;
  for (int c : tree.topo_order) {
    auto& cd = ws.cliques[c];
    const int np = static_cast<int>(cd.parents.size());
    if (cd.child < 0) {
      result *= ws.delta_value(c, cd.diff_mask, 0, np);
      continue;
    }
    ws.msg[c].assign(1u << (2 * cd.nbits), 0.0);
    const std::uint32_t own = cd.diff_mask & ~cd.child_sep;
    const std::uint32_t sub = cd.child_sep;
    // Exclusive variables are fully differenced inside the subtree; the
    // published table is keyed by (B over the sepset, lower-pin pattern).
    for (std::uint32_t b = sub;; b = (b - 1) & sub) {
      const std::uint32_t rest = sub & ~b;
      for (std::uint32_t l = rest;; l = (l - 1) & rest) {
        ws.msg[c][(b << cd.nbits) | l] = ws.delta_value(c, b | own, l, np);
        if (l == 0) break;
      }
      if (b == 0) break;
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

}  // namespace cdn
