#include "tspn/spn/validate.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

namespace tspn {

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::Unreachable: return "unreachable";
    case ViolationKind::NegativeWeight: return "negative-weight";
    case ViolationKind::Incomplete: return "incomplete";
    case ViolationKind::NotDecomposable: return "not-decomposable";
  }
  return "?";
}

bool ValidityReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidityReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (const auto& v : violations) {
    os << to_string(v.kind) << " at node " << v.node.index;
    if (!v.detail.empty()) os << " (" << v.detail << ")";
    os << '\n';
  }
  return os.str();
}

namespace {

enum class Mark : std::uint8_t { White, Grey, Black };

// Iterative DFS over every node; records the source of each back edge.
std::vector<NodeId> find_cycles(const SpnGraph& graph, std::vector<NodeId>& post_order) {
  const auto n = graph.size();
  std::vector<Mark> mark(n, Mark::White);
  std::vector<NodeId> cycle_nodes;
  struct Frame {
    std::uint32_t node;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (std::uint32_t start = 0; start < n; ++start) {
    if (mark[start] != Mark::White) continue;
    stack.push_back({start, 0});
    mark[start] = Mark::Grey;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& children = graph.nodes()[f.node].children;
      if (f.next < children.size()) {
        const std::uint32_t c = children[f.next++].index;
        if (mark[c] == Mark::White) {
          mark[c] = Mark::Grey;
          stack.push_back({c, 0});
        } else if (mark[c] == Mark::Grey) {
          cycle_nodes.push_back(NodeId{f.node});
        }
      } else {
        mark[f.node] = Mark::Black;
        post_order.push_back(NodeId{f.node});
        stack.pop_back();
      }
    }
  }
  return cycle_nodes;
}

std::vector<bool> reachable_from_root(const SpnGraph& graph) {
  std::vector<bool> seen(graph.size(), false);
  std::vector<std::uint32_t> stack{graph.root().index};
  seen[graph.root().index] = true;
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (NodeId c : graph.nodes()[i].children) {
      if (!seen[c.index]) {
        seen[c.index] = true;
        stack.push_back(c.index);
      }
    }
  }
  return seen;
}

std::vector<std::vector<std::uint32_t>> scopes_in_order(const SpnGraph& graph,
                                                        const std::vector<NodeId>& post_order) {
  std::vector<std::vector<std::uint32_t>> scope(graph.size());
  for (NodeId id : post_order) {
    const Node& n = graph.nodes()[id.index];
    auto& s = scope[id.index];
    switch (n.kind) {
      case NodeKind::Indicator: s = {n.variable}; break;
      case NodeKind::Feature: break;
      case NodeKind::Sum:
      case NodeKind::Product:
        for (NodeId c : n.children) {
          std::vector<std::uint32_t> merged;
          std::set_union(s.begin(), s.end(), scope[c.index].begin(), scope[c.index].end(),
                         std::back_inserter(merged));
          s = std::move(merged);
        }
        break;
    }
  }
  return scope;
}

std::string scope_string(const std::vector<std::uint32_t>& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

}  // namespace

std::vector<std::vector<std::uint32_t>> compute_scopes(const SpnGraph& graph) {
  graph.check_structure();
  std::vector<NodeId> post_order;
  if (!find_cycles(graph, post_order).empty()) {
    throw StructuralError(graph.root(), "scopes are undefined on a cyclic graph");
  }
  return scopes_in_order(graph, post_order);
}

ValidityReport validate(const SpnGraph& graph) {
  graph.check_structure();
  ValidityReport report;
  std::vector<NodeId> post_order;
  for (NodeId id : find_cycles(graph, post_order)) {
    report.violations.push_back({id, ViolationKind::Cycle, "back edge"});
  }
  const auto reach = reachable_from_root(graph);
  for (std::uint32_t i = 0; i < graph.size(); ++i) {
    if (!reach[i]) report.violations.push_back({NodeId{i}, ViolationKind::Unreachable, ""});
  }
  for (std::uint32_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.nodes()[i];
    if (n.kind != NodeKind::Sum) continue;
    for (std::size_t j = 0; j < n.weights.size(); ++j) {
      if (!(n.weights[j] >= 0.0) || !std::isfinite(n.weights[j])) {
        report.violations.push_back(
            {NodeId{i}, ViolationKind::NegativeWeight, "edge " + std::to_string(j)});
      }
    }
  }
  if (report.has(ViolationKind::Cycle)) return report;

  const auto scope = scopes_in_order(graph, post_order);
  for (std::uint32_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.nodes()[i];
    if (n.kind == NodeKind::Sum) {
      const auto& first = scope[n.children.front().index];
      for (NodeId c : n.children) {
        if (scope[c.index] != first) {
          report.violations.push_back({NodeId{i}, ViolationKind::Incomplete,
                                       "child " + std::to_string(c.index) + " scope " +
                                           scope_string(scope[c.index]) + " vs " +
                                           scope_string(first)});
          break;
        }
      }
    } else if (n.kind == NodeKind::Product) {
      std::vector<std::uint32_t> seen;
      bool clash = false;
      for (NodeId c : n.children) {
        std::vector<std::uint32_t> common;
        std::set_intersection(seen.begin(), seen.end(), scope[c.index].begin(),
                              scope[c.index].end(), std::back_inserter(common));
        if (!common.empty() && !clash) {
          report.violations.push_back({NodeId{i}, ViolationKind::NotDecomposable,
                                       "children share " + scope_string(common)});
          clash = true;
        }
        std::vector<std::uint32_t> merged;
        std::set_union(seen.begin(), seen.end(), scope[c.index].begin(), scope[c.index].end(),
                       std::back_inserter(merged));
        seen = std::move(merged);
      }
    }
  }
  return report;
}

}  // namespace tspn
