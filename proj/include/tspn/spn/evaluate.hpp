#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tspn/spn/evidence.hpp"
#include "tspn/spn/feature_tensor.hpp"
#include "tspn/spn/graph.hpp"

namespace tspn {

/// Soft inference sums at sum nodes; hard inference takes the weighted max
/// (the max-product network). Mixed keeps sums above the label indicators
/// soft and turns every other sum into a max node.
enum class Inference : std::uint8_t { Soft, Hard, Mixed };

Inference parse_inference(const std::string& name);  // soft | hard | mixed

const char* to_string(Inference mode);

/// Evaluation order for one graph. Rebuild it after structural edits; weight
/// edits keep it valid.
struct Schedule {
  std::vector<NodeId> order;        // nodes reachable from the root, children first
  std::vector<NodeId> label_order;  // the part of `order` whose scope holds the label
  std::vector<std::uint8_t> label_dependent;  // per node, 1 for members of label_order
  std::uint32_t feature_grid = 0;
  std::uint32_t feature_depth = 0;
};

/// Throws StructuralError on malformed indices or a cycle.
Schedule make_schedule(const SpnGraph& graph);

/// Per-node log-values of one bottom-up pass.
struct ForwardPass {
  std::vector<double> log_values;
  // Winning child position per max node, -1 for soft sums, other nodes, or
  // when every child is -inf. Ties go to the lowest child NodeId.
  std::vector<std::int32_t> winners;
  Inference mode = Inference::Soft;

  double root_value(const SpnGraph& graph) const { return log_values[graph.root().index]; }
};

ForwardPass forward(const SpnGraph& graph, const Schedule& schedule, const Evidence& evidence,
                    Inference mode);

/// Recomputes only `nodes` (in the given order) on top of an existing pass.
void forward_partial(const SpnGraph& graph, const Schedule& schedule, std::span<const NodeId> nodes,
                     const Evidence& evidence, ForwardPass& pass);

/// log S[evidence]. Zero-probability evidence yields -inf.
double evaluate(const SpnGraph& graph, const Evidence& evidence);
double evaluate(const SpnGraph& graph, const Schedule& schedule, const Evidence& evidence,
                Inference mode = Inference::Soft);

/// log S[*]: every indicator clamped to 1, features marginalized.
double partition(const SpnGraph& graph);

/// Evidence equal to `base` with the label variable clamped to `label`.
Evidence clamp_label(const SpnGraph& graph, const Evidence& base, std::uint32_t label);

struct LabelPasses {
  ForwardPass marginal;               // label indicators all 1: S[1, 1 | x]
  std::vector<ForwardPass> per_label;  // label clamped to y: S[y, 1 | x]
};

/// One full pass per label plus the label-marginal pass. Label-independent
/// nodes are computed once and shared.
LabelPasses label_passes(const SpnGraph& graph, const Schedule& schedule, const Evidence& base,
                         Inference mode);

/// log S[y, 1 | x] for every label y (hidden indicators at 1).
std::vector<double> class_scores(const SpnGraph& graph, const FeatureTensor& x,
                                 Inference mode = Inference::Soft);
std::vector<double> class_scores(const SpnGraph& graph, const Schedule& schedule,
                                 const Evidence& base, Inference mode = Inference::Soft);

/// Index of the largest score; ties resolve to the lowest label.
std::uint32_t argmax_label(std::span<const double> scores);

/// Max-shifted log-sum-exp; -inf entries are ignored and an all -inf input gives -inf.
double log_sum_exp(std::span<const double> values);

}  // namespace tspn
