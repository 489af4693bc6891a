#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "tspn/learn/objective.hpp"

namespace tspn {

struct EpochMetrics {
  std::uint32_t epoch = 0;  // 0 is the untrained model
  double objective = 0.0;
  double train_accuracy = 0.0;
  double weight_norm = 0.0;  // ||w||_2 over sum-edge weights
};

/// Raised when the objective turns NaN during SGD.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t sample_index, const std::string& what);
  std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Per-sample SGD ascent on the max-margin objective. Samples are visited in a
/// freshly shuffled order each epoch (seeded by config.seed). After every step
/// sum-edge weights are clamped to config.weight_floor. The graph is updated
/// in place; the returned metrics start with the untrained state.
std::vector<EpochMetrics> train(SpnGraph& graph, std::span<const Sample> data,
                                const TrainingConfig& config, const EpochCallback& on_epoch = {});

/// Same loop on the conditional log-likelihood.
std::vector<EpochMetrics> cll_train(SpnGraph& graph, std::span<const Sample> data,
                                    const TrainingConfig& config, const EpochCallback& on_epoch = {});

std::vector<EpochMetrics> train_with(Objective objective, SpnGraph& graph,
                                     std::span<const Sample> data, const TrainingConfig& config,
                                     const EpochCallback& on_epoch = {});

/// CSV with header `epoch,objective,train_accuracy,weight_norm`.
void write_metrics_csv(std::ostream& os, std::span<const EpochMetrics> metrics);

}  // namespace tspn
