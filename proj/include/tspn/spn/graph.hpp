#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tspn {

/// Dense index of a node inside one SpnGraph.
struct NodeId {
  std::uint32_t index = 0;

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

enum class NodeKind : std::uint8_t { Sum, Product, Indicator, Feature };

const char* to_string(NodeKind kind);

/// Raised for graphs whose indices or arities are malformed.
class StructuralError : public std::runtime_error {
 public:
  StructuralError(NodeId node, const std::string& what);
  NodeId node() const noexcept { return node_; }

 private:
  NodeId node_;
};

/// Raised when evidence does not cover a leaf.
class IncompleteEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on feature tensor / grid dimension mismatches.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  NodeKind kind = NodeKind::Product;
  std::vector<NodeId> children;
  // Sum nodes: one non-negative weight per child, linear domain.
  std::vector<double> weights;
  // Indicator leaves: [variable = value]. Binary variables use value 1 for the
  // positive literal and 0 for the negated one.
  std::uint32_t variable = 0;
  std::uint32_t value = 0;
  // Feature leaves: grid cell and shared template index; log-value is
  // template(templ) . x(row, col).
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint32_t templ = 0;
};

/// Rooted DAG of sum, product and leaf nodes.
///
/// The graph is a plain container: construction never checks structure beyond
/// index ranges at insertion time. Use validate() before evaluating graphs from
/// untrusted sources (deserialized files, mutated copies).
class SpnGraph {
 public:
  NodeId add_sum(std::vector<NodeId> children, std::vector<double> weights);
  NodeId add_product(std::vector<NodeId> children);
  NodeId add_indicator(std::uint32_t variable, std::uint32_t value);
  NodeId add_feature(std::uint32_t row, std::uint32_t col, std::uint32_t templ);
  /// Adds a template vector that feature leaves can share; returns its index.
  std::uint32_t add_template(std::vector<double> values);
  /// Appends a node as-is; children may reference nodes added later.
  NodeId add_node(Node node);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  const Node& node(NodeId id) const;
  Node& node(NodeId id);
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::span<Node> nodes() noexcept { return nodes_; }

  std::size_t template_count() const noexcept { return templates_.size(); }
  std::span<const double> template_at(std::uint32_t index) const;
  std::span<double> template_at(std::uint32_t index);

  NodeId root() const noexcept { return root_; }
  void set_root(NodeId id);

  std::uint32_t label_variable() const noexcept { return label_variable_; }
  std::uint32_t label_count() const noexcept { return label_count_; }
  void set_label(std::uint32_t variable, std::uint32_t count);

  /// Number of values of `variable`: label_count() for the label variable,
  /// otherwise 1 + the largest indicator value seen (at least 2).
  std::uint32_t cardinality(std::uint32_t variable) const;
  /// 1 + the largest indicator variable id; 0 when there are no indicators.
  std::uint32_t variable_count() const;

  /// Side of the feature grid (1 + max row/col over feature leaves), 0 without leaves.
  std::uint32_t feature_grid() const;
  /// Length shared by all templates, 0 without templates.
  std::uint32_t feature_depth() const;

  std::size_t sum_edge_count() const;

  /// Index ranges, sum arity/weight-count agreement, template lengths.
  /// Throws StructuralError naming the first offending node.
  void check_structure() const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> templates_;
  NodeId root_{};
  std::uint32_t label_variable_ = 0;
  std::uint32_t label_count_ = 0;
};

}  // namespace tspn
