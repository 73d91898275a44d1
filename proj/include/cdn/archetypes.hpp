#pragma once

#include <cstdint>
#include <string>

#include "cdn/model.hpp"

namespace cdn {

enum class Family { chain, loop, tree, grid };

Family family_from_string(const std::string& s);
std::string to_string(Family f);

// Structural generators with standard normal margins. n counts variables for
// chain/loop, levels for the complete binary tree, and the side width for
// the grid (one factor per lattice edge).
struct ArchetypeSpec {
  Family family = Family::chain;
  int n = 2;
  CopulaKind kind = CopulaKind::clayton;
  bool random_params = false;  // else every factor takes `param`
  double param = 1.0;
};

// Random parameters are drawn the way learning initializes: Clayton through
// uniform Kendall tau on (0, 0.5), normal uniform on (0, 1). Throws
// InvalidSpec for sizes below the family minimum.
CdnModel generate(const ArchetypeSpec& spec, std::uint64_t seed);

}  // namespace cdn
