#include "tspn/spn/labels.hpp"

#include <algorithm>

namespace tspn {

bool LabelBranches::hierarchical() const {
  if (groups.size() < 2) return false;
  return std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() > 1; });
}

namespace {

LabelBranches flat(std::uint32_t labels) {
  LabelBranches b;
  for (std::uint32_t y = 0; y < labels; ++y) {
    b.groups.push_back({y});
    b.group_of.push_back(y);
  }
  return b;
}

std::vector<std::uint32_t> labels_below(const SpnGraph& graph, NodeId start) {
  std::vector<bool> seen(graph.size(), false);
  std::vector<bool> label_seen(graph.label_count(), false);
  std::vector<std::uint32_t> stack{start.index};
  seen[start.index] = true;
  while (!stack.empty()) {
    const Node& n = graph.nodes()[stack.back()];
    stack.pop_back();
    if (n.kind == NodeKind::Indicator && n.variable == graph.label_variable() &&
        n.value < graph.label_count()) {
      label_seen[n.value] = true;
    }
    for (NodeId c : n.children) {
      if (!seen[c.index]) {
        seen[c.index] = true;
        stack.push_back(c.index);
      }
    }
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t y = 0; y < label_seen.size(); ++y) {
    if (label_seen[y]) out.push_back(y);
  }
  return out;
}

}  // namespace

LabelBranches label_branches(const SpnGraph& graph) {
  graph.check_structure();
  const std::uint32_t labels = graph.label_count();
  const Node& root = graph.node(graph.root());
  if (labels == 0 || root.kind != NodeKind::Sum) return flat(labels);

  LabelBranches b;
  b.group_of.assign(labels, labels);
  for (NodeId child : root.children) {
    auto group = labels_below(graph, child);
    if (group.empty()) return flat(labels);
    for (std::uint32_t y : group) {
      if (b.group_of[y] != labels) return flat(labels);
      b.group_of[y] = static_cast<std::uint32_t>(b.groups.size());
    }
    b.groups.push_back(std::move(group));
  }
  if (std::find(b.group_of.begin(), b.group_of.end(), labels) != b.group_of.end()) return flat(labels);
  return b;
}

}  // namespace tspn
