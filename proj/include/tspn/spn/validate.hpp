#pragma once

#include <string>
#include <vector>

#include "tspn/spn/graph.hpp"

namespace tspn {

enum class ViolationKind { Cycle, Unreachable, NegativeWeight, Incomplete, NotDecomposable };

const char* to_string(ViolationKind kind);

struct Violation {
  NodeId node;
  ViolationKind kind;
  std::string detail;
};

struct ValidityReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

/// Checks acyclicity, reachability from the root, weight signs, completeness
/// of sum nodes and decomposability of product nodes.
///
/// Scopes are sets of indicator variables; feature leaves are conditioning
/// inputs and carry an empty scope. Scope checks are skipped when the graph
/// has a cycle. Malformed indices throw StructuralError instead of being
/// reported.
ValidityReport validate(const SpnGraph& graph);

/// Sorted variable scope of every node; requires an acyclic graph.
std::vector<std::vector<std::uint32_t>> compute_scopes(const SpnGraph& graph);

}  // namespace tspn
