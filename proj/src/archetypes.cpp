#include "cdn/archetypes.hpp"

#include <utility>
#include <vector>

#include "cdn/errors.hpp"
#include "cdn/rng.hpp"

namespace cdn {

Family family_from_string(const std::string& s) {
  if (s == "chain") return Family::chain;
  if (s == "loop") return Family::loop;
  if (s == "tree") return Family::tree;
  if (s == "grid") return Family::grid;
  throw InvalidSpec("unknown model family: " + s);
}

std::string to_string(Family f) {
  switch (f) {
    case Family::chain:
      return "chain";
    case Family::loop:
      return "loop";
    case Family::tree:
      return "tree";
    case Family::grid:
      return "grid";
  }
  return "chain";
}

namespace {

std::vector<std::pair<int, int>> family_edges(Family family, int n,
                                              int& num_vars) {
  std::vector<std::pair<int, int>> edges;
  switch (family) {
    case Family::chain:
      if (n < 2) throw InvalidSpec("chain needs n >= 2");
      num_vars = n;
      for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
      break;
    case Family::loop:
      if (n < 3) throw InvalidSpec("loop needs n >= 3");
      num_vars = n;
      for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
      break;
    case Family::tree: {
      if (n < 2) throw InvalidSpec("tree needs n >= 2 levels");
      num_vars = (1 << n) - 1;
      for (int child = 1; child < num_vars; ++child)
        edges.push_back({(child - 1) / 2, child});
      break;
    }
    case Family::grid: {
      if (n < 2) throw InvalidSpec("grid needs n >= 2");
      num_vars = n * n;
      const auto id = [n](int r, int c) { return r * n + c; };
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          if (c + 1 < n) edges.push_back({id(r, c), id(r, c + 1)});
          if (r + 1 < n) edges.push_back({id(r, c), id(r + 1, c)});
        }
      }
      break;
    }
  }
  return edges;
}

}  // namespace

CdnModel generate(const ArchetypeSpec& spec, std::uint64_t seed) {
  int num_vars = 0;
  const auto edges = family_edges(spec.family, spec.n, num_vars);

  CdnModel m;
  m.variables.resize(num_vars);
  for (int v = 0; v < num_vars; ++v) {
    m.variables[v].name = "X" + std::to_string(v + 1);
    m.variables[v].margin = NormalMargin{0.0, 1.0};
  }
  Rng rng(seed);
  for (const auto& [a, b] : edges) {
    CopulaFactor f;
    f.kind = spec.kind;
    f.scope = {a, b};
    if (spec.random_params) {
      if (spec.kind == CopulaKind::clayton) {
        const double tau = rng.next_open(0.0, 0.5);
        f.param = 2.0 * tau / (1.0 - tau);
      } else {
        f.param = rng.next_open(0.0, 1.0);
      }
    } else {
      f.param = spec.param;
    }
    m.factors.push_back(std::move(f));
  }
  m.finalize();
  return m;
}

}  // namespace cdn
