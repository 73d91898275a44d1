#pragma once

#include <string>
#include <vector>

#include "cdn/errors.hpp"

namespace cdn {

// Clique tree produced by simulated variable elimination (min-fill). The
// structure may be a forest when the model is disconnected; child == -1
// marks component roots. topo_order lists every clique before its child.
struct CliqueTree {
  struct Clique {
    std::vector<int> vars;     // sorted variable indices
    std::vector<int> factors;  // factor indices assigned to this clique
  };

  std::vector<Clique> cliques;
  std::vector<int> child;                 // downstream clique per clique
  std::vector<std::vector<int>> sepsets;  // with child; empty for roots
  std::vector<int> topo_order;

  int num_cliques() const { return static_cast<int>(cliques.size()); }
};

// Builds the tree for the given factor scopes over variables 0..n-1. Ties in
// the fill-edge count break toward the lowest variable index, cliques whose
// scope is contained in a neighbor are merged away, and each factor lands in
// the first containing clique in topological order, so construction is
// deterministic. Throws EmptyModel when no scopes are given.
CliqueTree build_min_fill(const std::vector<std::vector<int>>& scopes,
                          int num_vars);

// Family preservation, running intersection, and topological consistency;
// returns one message per violated property with a witness.
std::vector<std::string> validate_tree(
    const CliqueTree& t, const std::vector<std::vector<int>>& scopes,
    int num_vars);

// Largest clique cardinality minus one.
int treewidth(const CliqueTree& t);

// Diagnostic JSON dump of cliques and sepsets.
std::string tree_to_json(const CliqueTree& t);

}  // namespace cdn
