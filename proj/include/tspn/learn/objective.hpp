#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tspn/spn/evaluate.hpp"
#include "tspn/spn/feature_tensor.hpp"
#include "tspn/spn/gradient.hpp"
#include "tspn/spn/labels.hpp"

namespace tspn {

struct Sample {
  FeatureTensor x;
  std::uint32_t label = 0;
};

enum class Objective : std::uint8_t { MaxMargin, ConditionalLikelihood };

struct TrainingConfig {
  double alpha = 0.01;      // learning rate
  bool decay = true;        // alpha_k = alpha / (1 + k / N)
  double eta = 2.0;         // softmax sharpness of the log margin, >= 1
  double lambda = 1.0;      // margin scale inside the hinge
  double beta = 0.0;        // L2 coefficient on sum-edge weights
  std::uint32_t epochs = 30;
  std::uint64_t seed = 0;
  Inference inference = Inference::Mixed;
  bool learn_templates = true;  // also update feature-leaf templates
  // On a t-SPN, score the merged group against the other branches and the
  // true class against its group mates, instead of one margin over all labels.
  bool staged_margin = true;
  double weight_floor = 1e-12;

  /// Throws std::invalid_argument on out-of-range hyperparameters.
  void validate() const;
};

struct ObjectiveValue {
  double value = 0.0;        // H (max margin) or sum log P(y|x) (CLL), regularizer included
  std::size_t correct = 0;   // samples whose argmax label is right
  std::size_t samples = 0;
};

struct ObjectiveGradient {
  ObjectiveValue objective;
  ParamGradient gradient;  // dH / dtheta: sum-edge weights and templates
};

/// Sum of squared sum-edge weights.
double weight_squared_norm(const SpnGraph& graph);

/// H = sum_n h(lambda * D_n) - beta * ||w||^2 over `batch`, and its gradient.
///
/// D_n is the softmax log margin of the per-label scores under
/// config.inference; hard inference differentiates through the winning trees
/// of the max-product passes. The regularizer gradient -2 beta w is applied
/// whether or not a sample is inside the hinge.
ObjectiveGradient mm_objective(const SpnGraph& graph, const Schedule& schedule,
                               std::span<const Sample> batch, const TrainingConfig& config);
ObjectiveValue mm_objective_value(const SpnGraph& graph, const Schedule& schedule,
                                  std::span<const Sample> batch, const TrainingConfig& config);

/// sum_n log P(y_n | x_n) - beta * ||w||^2 and its gradient.
ObjectiveGradient cll_objective(const SpnGraph& graph, const Schedule& schedule,
                                std::span<const Sample> batch, const TrainingConfig& config);
ObjectiveValue cll_objective_value(const SpnGraph& graph, const Schedule& schedule,
                                   std::span<const Sample> batch, const TrainingConfig& config);

/// Argmax of class_scores under `mode`.
std::uint32_t predict(const SpnGraph& graph, const Schedule& schedule, const FeatureTensor& x,
                      Inference mode);
double accuracy(const SpnGraph& graph, std::span<const Sample> data, Inference mode);

}  // namespace tspn
