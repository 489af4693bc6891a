#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tspn/spn/graph.hpp"

namespace tspn {

/// Recipe for the class/part/component/position architecture.
struct ArchitectureSpec {
  std::uint32_t classes = 6;     // C
  std::uint32_t parts = 10;      // P
  std::uint32_t components = 25; // T
  std::uint32_t grid = 8;        // G
  std::uint32_t depth = 1600;    // K
  std::uint64_t seed = 0;
  double template_scale = 0.1;   // templates start uniform in [-s, s]

  void validate() const;  // std::invalid_argument unless every count is positive
  /// 1 + C (2 + P (1 + T (1 + G^2))): root, then per class its product, label
  /// indicator, part sums, component sums and feature leaves.
  std::size_t node_count() const;
};

struct ConfusionSubset {
  std::vector<std::uint32_t> classes;  // sorted, at least two
  std::uint64_t score = 0;             // confusion counts among the members, both directions
};

/// Flat model: root sum over C class products, each [Y = c] times P part sums
/// over T component sums over the G x G feature leaves of one shared template.
/// Weights start uniform in [0.5, 1.5] / fan-in. Every class draws from its own
/// random stream seeded by (spec.seed, c), so a class subtree is identical in
/// every model built from the same spec.
SpnGraph build_flat(const ArchitectureSpec& spec);

/// Flat model with the classes of `subset` moved under one merged root branch.
/// The merged edge starts at the sum of the members' root weights and the
/// sub-SPN sum gives member y the weight w_y / sum, so the unnormalized class
/// masses equal those of build_flat(spec). A subset covering every class
/// returns build_flat(spec) and sets *warning.
/// The same merge on any graph whose last node is a root sum with one branch
/// per class.
SpnGraph merge_branches(const SpnGraph& flat, const ConfusionSubset& subset, std::string* warning = nullptr);

SpnGraph build_tspn(const ArchitectureSpec& spec, const ConfusionSubset& subset,
                    std::string* warning = nullptr);

}  // namespace tspn
