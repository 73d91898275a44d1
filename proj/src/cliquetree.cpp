#include "cdn/cliquetree.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace cdn {

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

std::vector<int> sorted_intersection(const std::vector<int>& a,
                                     const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

bool is_subset(const std::vector<int>& small, const std::vector<int>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

CliqueTree build_min_fill(const std::vector<std::vector<int>>& scopes,
                          int num_vars) {
  if (scopes.empty()) throw EmptyModel("no factor scopes given");

  // Moralized variable graph: co-scoped variables are adjacent.
  std::vector<std::set<int>> adj(num_vars);
  std::vector<char> used(num_vars, 0);
  for (const std::vector<int>& s : scopes)
    for (std::size_t i = 0; i < s.size(); ++i) {
      used[s[i]] = 1;
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        adj[s[i]].insert(s[j]);
        adj[s[j]].insert(s[i]);
      }
    }

  // Simulated elimination with the min fill-edge criterion. Ties break
  // toward the lowest variable index so construction is deterministic.
  std::vector<std::vector<int>> candidates;
  std::vector<char> eliminated(num_vars, 0);
  int remaining = 0;
  for (int v = 0; v < num_vars; ++v)
    if (used[v]) ++remaining;
  while (remaining > 0) {
    int best = -1;
    long best_fill = -1;
    for (int v = 0; v < num_vars; ++v) {
      if (!used[v] || eliminated[v]) continue;
      long fill = 0;
      for (auto it = adj[v].begin(); it != adj[v].end(); ++it)
        for (auto jt = std::next(it); jt != adj[v].end(); ++jt)
          if (!adj[*it].count(*jt)) ++fill;
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    std::vector<int> clique(adj[best].begin(), adj[best].end());
    clique.push_back(best);
    std::sort(clique.begin(), clique.end());
    candidates.push_back(std::move(clique));
    for (int a : adj[best])
      for (int b : adj[best])
        if (a != b) adj[a].insert(b);
    for (int a : adj[best]) adj[a].erase(best);
    adj[best].clear();
    eliminated[best] = 1;
    --remaining;
  }

  // Elimination emits one candidate per variable; only the maximal ones are
  // cliques of the fill-in graph. Containment can point either way (the
  // remaining graph shrinks, but fill edges can also grow neighborhoods),
  // so check both; ties on equal sets keep the earliest.
  std::vector<char> keep(candidates.size(), 1);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = 0; j < candidates.size() && keep[i]; ++j) {
      if (i == j || !keep[j]) continue;
      if (is_subset(candidates[i], candidates[j]) &&
          (candidates[i].size() < candidates[j].size() || i > j))
        keep[i] = 0;
    }
  }

  CliqueTree t;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (keep[i]) t.cliques.push_back({std::move(candidates[i]), {}});
  const int nc = t.num_cliques();

  // Maximum spanning tree over sepset sizes links the maximal cliques of the
  // chordal fill-in graph into a junction tree (forest when disconnected).
  struct CandidateEdge {
    int w, a, b;
  };
  std::vector<CandidateEdge> edges;
  for (int i = 0; i < nc; ++i)
    for (int j = i + 1; j < nc; ++j) {
      const int w = static_cast<int>(
          sorted_intersection(t.cliques[i].vars, t.cliques[j].vars).size());
      if (w > 0) edges.push_back({w, i, j});
    }
  std::sort(edges.begin(), edges.end(),
            [](const CandidateEdge& x, const CandidateEdge& y) {
              if (x.w != y.w) return x.w > y.w;
              if (x.a != y.a) return x.a < y.a;
              return x.b < y.b;
            });
  DisjointSet ds(nc);
  std::vector<std::vector<int>> nbr(nc);
  for (const CandidateEdge& e : edges)
    if (ds.unite(e.a, e.b)) {
      nbr[e.a].push_back(e.b);
      nbr[e.b].push_back(e.a);
    }

  // Orient each component toward its lowest-index clique and order cliques
  // deepest first, which puts every clique before its child.
  t.child.assign(nc, -1);
  std::vector<int> depth(nc, -1);
  std::vector<int> order;
  for (int root = 0; root < nc; ++root) {
    if (depth[root] >= 0) continue;
    // root is the smallest unvisited index of its component.
    depth[root] = 0;
    std::vector<int> queue{root};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int c = queue[qi];
      for (int nb : nbr[c]) {
        if (depth[nb] >= 0) continue;
        depth[nb] = depth[c] + 1;
        t.child[nb] = c;
        queue.push_back(nb);
      }
    }
  }
  order.resize(nc);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (depth[a] != depth[b]) return depth[a] > depth[b];
    return a < b;
  });
  t.topo_order = order;

  t.sepsets.resize(nc);
  for (int c = 0; c < nc; ++c)
    if (t.child[c] >= 0)
      t.sepsets[c] =
          sorted_intersection(t.cliques[c].vars, t.cliques[t.child[c]].vars);

  // First containing clique in topological order gets the factor.
  for (std::size_t f = 0; f < scopes.size(); ++f) {
    std::vector<int> scope = scopes[f];
    std::sort(scope.begin(), scope.end());
    bool placed = false;
    for (int c : t.topo_order) {
      if (is_subset(scope, t.cliques[c].vars)) {
        t.cliques[c].factors.push_back(static_cast<int>(f));
        placed = true;
        break;
      }
    }
    if (!placed)
      throw InvalidModel("internal: no clique covers factor " +
                         std::to_string(f));
  }
  return t;
}

std::vector<std::string> validate_tree(
    const CliqueTree& t, const std::vector<std::vector<int>>& scopes,
    int num_vars) {
  std::vector<std::string> issues;
  const int nc = t.num_cliques();

  // Family preservation and exactly-once assignment.
  std::vector<int> assigned(scopes.size(), 0);
  for (int c = 0; c < nc; ++c)
    for (int f : t.cliques[c].factors) {
      ++assigned[f];
      std::vector<int> scope = scopes[f];
      std::sort(scope.begin(), scope.end());
      if (!is_subset(scope, t.cliques[c].vars))
        issues.push_back("family preservation: factor " + std::to_string(f) +
                         " assigned to non-covering clique " +
                         std::to_string(c));
    }
  for (std::size_t f = 0; f < scopes.size(); ++f)
    if (assigned[f] != 1)
      issues.push_back("factor " + std::to_string(f) + " assigned " +
                       std::to_string(assigned[f]) + " times");

  // Running intersection: the cliques holding each variable must form one
  // connected piece under the child edges.
  DisjointSet ds(nc);
  for (int c = 0; c < nc; ++c)
    if (t.child[c] >= 0) ds.unite(c, t.child[c]);
  for (int v = 0; v < num_vars; ++v) {
    std::vector<int> holders;
    for (int c = 0; c < nc; ++c)
      if (std::binary_search(t.cliques[c].vars.begin(),
                             t.cliques[c].vars.end(), v))
        holders.push_back(c);
    if (holders.size() < 2) continue;
    DisjointSet local(nc);
    for (int c = 0; c < nc; ++c) {
      const int ch = t.child[c];
      if (ch < 0) continue;
      const bool c_has = std::binary_search(t.cliques[c].vars.begin(),
                                            t.cliques[c].vars.end(), v);
      const bool ch_has = std::binary_search(t.cliques[ch].vars.begin(),
                                             t.cliques[ch].vars.end(), v);
      if (c_has && ch_has) local.unite(c, ch);
    }
    for (std::size_t i = 1; i < holders.size(); ++i)
      if (local.find(holders[i]) != local.find(holders[0])) {
        issues.push_back("running intersection: variable " +
                         std::to_string(v) +
                         " spans disconnected cliques " +
                         std::to_string(holders[0]) + " and " +
                         std::to_string(holders[i]));
        break;
      }
  }

  // Topological consistency.
  if (static_cast<int>(t.topo_order.size()) != nc) {
    issues.push_back("topological order has wrong length");
  } else {
    std::vector<int> pos(nc, -1);
    for (int i = 0; i < nc; ++i) {
      const int c = t.topo_order[i];
      if (c < 0 || c >= nc || pos[c] >= 0) {
        issues.push_back("topological order is not a permutation");
        pos.clear();
        break;
      }
      pos[c] = i;
    }
    if (!pos.empty())
      for (int c = 0; c < nc; ++c)
        if (t.child[c] >= 0 && pos[c] > pos[t.child[c]])
          issues.push_back("clique " + std::to_string(c) +
                           " ordered after its child");
  }
  return issues;
}

int treewidth(const CliqueTree& t) {
  std::size_t best = 0;
  for (const CliqueTree::Clique& c : t.cliques)
    best = std::max(best, c.vars.size());
  return static_cast<int>(best) - 1;
}

std::string tree_to_json(const CliqueTree& t) {
  std::ostringstream out;
  out << "{\"cliques\":[";
  for (int c = 0; c < t.num_cliques(); ++c) {
    if (c) out << ",";
    out << "{\"vars\":[";
    for (std::size_t i = 0; i < t.cliques[c].vars.size(); ++i)
      out << (i ? "," : "") << t.cliques[c].vars[i];
    out << "],\"factors\":[";
    for (std::size_t i = 0; i < t.cliques[c].factors.size(); ++i)
      out << (i ? "," : "") << t.cliques[c].factors[i];
    out << "],\"child\":" << t.child[c] << ",\"sepset\":[";
    for (std::size_t i = 0; i < t.sepsets[c].size(); ++i)
      out << (i ? "," : "") << t.sepsets[c][i];
    out << "]}";
  }
  out << "]}";
  return out.str();
}

}  // namespace cdn
