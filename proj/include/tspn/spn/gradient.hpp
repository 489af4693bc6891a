#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tspn/spn/evaluate.hpp"

namespace tspn {

/// Raised when a log-gradient needs 1/w for a non-positive winning weight.
class UndefinedGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradient with the parameter layout of one graph: sum-edge weights and
/// shared feature templates. edges is indexed by node, templates by template.
struct ParamGradient {
  std::vector<std::vector<double>> edges;
  std::vector<std::vector<double>> templates;

  static ParamGradient zeros_like(const SpnGraph& graph);

  void clear();
  void add_scaled(const ParamGradient& other, double scale);
  double squared_norm() const;
  bool all_zero() const;
};

/// Log-domain values and adjoints of one soft forward/backward sweep.
struct GradientTape {
  std::vector<double> log_values;
  std::vector<double> log_adjoints;  // log dS_root / dS_i; -inf off every live path
  // Winning child per max node (copied from a hard or mixed pass); empty for
  // soft passes. Max nodes pass adjoints and edge gradients to the winner only.
  std::vector<std::int32_t> routes;
  const FeatureTensor* features = nullptr;
  double root_log_value = -std::numeric_limits<double>::infinity();
  bool degenerate = false;  // root value was -inf; every gradient is reported as 0

  std::int32_t route(std::size_t node) const { return routes.empty() ? -1 : routes[node]; }

  /// dS/dw for the edge (sum, child position), linear domain.
  double weight_grad(const SpnGraph& graph, NodeId sum, std::size_t child) const;
  /// dS/dtheta for every sum edge and template entry, linear domain.
  ParamGradient gradients(const SpnGraph& graph) const;
  /// out += coef * d log S / d theta; no-op on a degenerate tape.
  void accumulate_log_gradient(const SpnGraph& graph, double coef, ParamGradient& out) const;
};

/// Backward sweep over a pass of any mode. For hard passes this is the
/// derivative of the max-product value along its winning tree.
GradientTape soft_backward(const SpnGraph& graph, const Schedule& schedule, const ForwardPass& pass,
                           const Evidence& evidence);
GradientTape soft_backward(const SpnGraph& graph, const Evidence& evidence);

/// Winning sub-tree of a max-product pass.
///
/// counts[i] is the number of times node i appears in the winning tree. For a
/// sum node on the tree the edge to its winner therefore has c = counts[i],
/// and every other edge of that node has c = 0.
struct MpnTrace {
  double log_value = -std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> winners;
  std::vector<std::uint32_t> counts;
  std::vector<NodeId> path;  // nodes with counts > 0, parents before children
  const FeatureTensor* features = nullptr;

  bool empty() const noexcept { return path.empty(); }
  std::uint32_t edge_count(NodeId sum, std::size_t child) const;
};

MpnTrace mpn_trace(const SpnGraph& graph, const Schedule& schedule, const ForwardPass& hard_pass,
                   const FeatureTensor* features);
MpnTrace mpn_evaluate(const SpnGraph& graph, const Schedule& schedule, const Evidence& evidence);
MpnTrace mpn_evaluate(const SpnGraph& graph, const Evidence& evidence);

/// d log M / d w_i = c_i / w_i on the winning tree, 0 elsewhere; templates get
/// c_leaf * x(row, col). Throws UndefinedGradient for a winning weight <= 0.
ParamGradient mpn_log_gradient(const SpnGraph& graph, const MpnTrace& trace);
void accumulate_mpn_log_gradient(const SpnGraph& graph, const MpnTrace& trace, double coef,
                                 ParamGradient& out);

/// coef * d log value / d theta for a pass of any mode: hard passes read off
/// the winning tree, soft and mixed passes run a backward sweep.
void accumulate_pass_log_gradient(const SpnGraph& graph, const Schedule& schedule,
                                  const ForwardPass& pass, const Evidence& evidence, double coef,
                                  ParamGradient& out);

struct CllGradient {
  ParamGradient gradient;
  double log_likelihood = 0.0;  // log P(y | x) (soft) or log M[y]/M[1] (hard)
  bool ok = true;               // false when S[y, 1 | x] = 0; gradient is then zero
};

/// d/dw log P(y|x) = dlog S[y,1|x]/dw - dlog S[1,1|x]/dw. Hard inference uses
/// the max-product values in both terms.
CllGradient cll_gradient(const SpnGraph& graph, const Schedule& schedule, const Evidence& base,
                         std::uint32_t label, Inference mode = Inference::Soft);
CllGradient cll_gradient(const SpnGraph& graph, const FeatureTensor& x, std::uint32_t label,
                         Inference mode = Inference::Soft);

}  // namespace tspn
