#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdn/archetypes.hpp"
#include "cdn/learning.hpp"

namespace cdn {

// Knobs for the batch studies. Empty vectors fall back to per-study defaults
// sized for desk runtime; flags on the CLI can push them to larger sweeps.
struct ExperimentOptions {
  Family family = Family::chain;
  CopulaKind copula = CopulaKind::clayton;
  std::vector<int> sizes;                 // model size parameter per family
  std::vector<int> sample_sizes;          // training-set sizes
  std::vector<double> missing_fractions;  // MCAR sweep
  std::vector<std::string> methods;       // learning methods to compare
  int trials = 5;
  int repetitions = 30;  // timing repetitions per trial
  std::uint64_t seed = 0;
};

// Fixed column set and order for each study id; golden-file tested.
std::string experiment_csv_header(const std::string& id);

// Runs one of {inference, learning, mcar, piecewise, limitation} and streams
// CSV (header plus one row per trial cell) to out. Deterministic given the
// seed: each trial draws from an independent counter-derived substream.
void run_experiment(const std::string& id, const ExperimentOptions& opt,
                    std::ostream& out);

// Marks a fraction of entries missing completely at random.
Dataset apply_mcar(const Dataset& data, double missing_frac,
                   std::uint64_t seed);

}  // namespace cdn
