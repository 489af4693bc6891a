#pragma once

#include <cstdint>
#include <vector>

#include "tspn/spn/graph.hpp"

namespace tspn {

/// Labels grouped by the root child whose sub-network carries their indicators.
///
/// A flat network has one singleton group per label. A t-SPN has one group
/// holding the merged confusable classes. Graphs whose root children do not
/// partition the labels are reported as flat (one singleton group per label).
struct LabelBranches {
  std::vector<std::vector<std::uint32_t>> groups;  // each sorted; groups ordered by root child
  std::vector<std::uint32_t> group_of;             // label -> group index

  bool hierarchical() const;
};

LabelBranches label_branches(const SpnGraph& graph);

}  // namespace tspn
