#include "tspn/spn/graph.hpp"

#include <algorithm>

namespace tspn {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Sum: return "sum";
    case NodeKind::Product: return "prod";
    case NodeKind::Indicator: return "ind";
    case NodeKind::Feature: return "feat";
  }
  return "?";
}

StructuralError::StructuralError(NodeId node, const std::string& what)
    : std::runtime_error("node " + std::to_string(node.index) + ": " + what), node_(node) {}

NodeId SpnGraph::add_sum(std::vector<NodeId> children, std::vector<double> weights) {
  Node n;
  n.kind = NodeKind::Sum;
  n.children = std::move(children);
  n.weights = std::move(weights);
  return add_node(std::move(n));
}

NodeId SpnGraph::add_product(std::vector<NodeId> children) {
  Node n;
  n.kind = NodeKind::Product;
  n.children = std::move(children);
  return add_node(std::move(n));
}

NodeId SpnGraph::add_indicator(std::uint32_t variable, std::uint32_t value) {
  Node n;
  n.kind = NodeKind::Indicator;
  n.variable = variable;
  n.value = value;
  return add_node(std::move(n));
}

NodeId SpnGraph::add_feature(std::uint32_t row, std::uint32_t col, std::uint32_t templ) {
  Node n;
  n.kind = NodeKind::Feature;
  n.row = row;
  n.col = col;
  n.templ = templ;
  return add_node(std::move(n));
}

std::uint32_t SpnGraph::add_template(std::vector<double> values) {
  templates_.push_back(std::move(values));
  return static_cast<std::uint32_t>(templates_.size() - 1);
}

std::span<const double> SpnGraph::template_at(std::uint32_t index) const {
  if (index >= templates_.size()) throw std::out_of_range("template index out of range");
  return templates_[index];
}

std::span<double> SpnGraph::template_at(std::uint32_t index) {
  if (index >= templates_.size()) throw std::out_of_range("template index out of range");
  return templates_[index];
}

NodeId SpnGraph::add_node(Node node) {
  NodeId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(std::move(node));
  return id;
}

const Node& SpnGraph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw StructuralError(id, "index out of range");
  return nodes_[id.index];
}

Node& SpnGraph::node(NodeId id) {
  if (id.index >= nodes_.size()) throw StructuralError(id, "index out of range");
  return nodes_[id.index];
}

void SpnGraph::set_root(NodeId id) {
  if (id.index >= nodes_.size()) throw StructuralError(id, "root index out of range");
  root_ = id;
}

void SpnGraph::set_label(std::uint32_t variable, std::uint32_t count) {
  label_variable_ = variable;
  label_count_ = count;
}

std::uint32_t SpnGraph::cardinality(std::uint32_t variable) const {
  if (label_count_ > 0 && variable == label_variable_) return label_count_;
  std::uint32_t card = 2;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Indicator && n.variable == variable) card = std::max(card, n.value + 1);
  }
  return card;
}

std::uint32_t SpnGraph::variable_count() const {
  std::uint32_t count = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Indicator) count = std::max(count, n.variable + 1);
  }
  if (label_count_ > 0) count = std::max(count, label_variable_ + 1);
  return count;
}

std::uint32_t SpnGraph::feature_grid() const {
  std::uint32_t side = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Feature) side = std::max({side, n.row + 1, n.col + 1});
  }
  return side;
}

std::uint32_t SpnGraph::feature_depth() const {
  return templates_.empty() ? 0 : static_cast<std::uint32_t>(templates_.front().size());
}

std::size_t SpnGraph::sum_edge_count() const {
  std::size_t count = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Sum) count += n.children.size();
  }
  return count;
}

void SpnGraph::check_structure() const {
  if (nodes_.empty()) throw StructuralError(NodeId{0}, "graph has no nodes");
  if (root_.index >= nodes_.size()) throw StructuralError(root_, "root index out of range");
  const std::uint32_t depth = feature_depth();
  for (const auto& t : templates_) {
    if (t.size() != depth) throw StructuralError(NodeId{0}, "template lengths differ");
  }
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    const NodeId id{i};
    for (NodeId c : n.children) {
      if (c.index >= nodes_.size()) {
        throw StructuralError(id, "child index " + std::to_string(c.index) + " out of range");
      }
    }
    switch (n.kind) {
      case NodeKind::Sum:
        if (n.children.empty()) throw StructuralError(id, "sum node without children");
        if (n.weights.size() != n.children.size()) {
          throw StructuralError(id, "sum node has " + std::to_string(n.children.size()) +
                                        " children but " + std::to_string(n.weights.size()) +
                                        " weights");
        }
        break;
      case NodeKind::Product:
        if (n.children.empty()) throw StructuralError(id, "product node without children");
        break;
      case NodeKind::Indicator:
        if (!n.children.empty()) throw StructuralError(id, "indicator leaf with children");
        if (label_count_ > 0 && n.variable == label_variable_ && n.value >= label_count_) {
          throw StructuralError(id, "label value " + std::to_string(n.value) + " out of range");
        }
        break;
      case NodeKind::Feature:
        if (!n.children.empty()) throw StructuralError(id, "feature leaf with children");
        if (n.templ >= templates_.size()) {
          throw StructuralError(id, "template index " + std::to_string(n.templ) + " out of range");
        }
        break;
    }
  }
}

}  // namespace tspn
