#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tspn/learn/trainer.hpp"
#include "tspn/structure/architecture.hpp"
#include "tspn/structure/confusion.hpp"

namespace tspn {

enum class Variant : std::uint8_t { Spn, SpnMm, Tspn, TspnMm };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);  // spn | spn_mm | tspn | tspn_mm
bool is_tree(Variant v);
Objective objective_of(Variant v);

struct PipelineConfig {
  ArchitectureSpec arch;
  TrainingConfig training;
  std::optional<std::uint32_t> subset_size;  // default_subset_size when unset
  double holdout = 0.2;                      // share of training data scored by the preliminary SPN
};

struct PipelineResult {
  SpnGraph model;
  std::vector<EpochMetrics> metrics;
  std::optional<ConfusionMatrix> preliminary;  // t-SPN variants only
  std::optional<ConfusionSubset> subset;       // unset if the t-SPN fell back to flat
  std::vector<std::string> notes;
};

/// Trains one variant. The t-SPN variants first fit a plain CLL SPN on a
/// stratified part of `data`, read the confused classes off its confusion
/// matrix on the rest, build the t-SPN and train it on all of `data`.
PipelineResult run_variant(Variant variant, std::span<const Sample> data, const PipelineConfig& config,
                           const EpochCallback& on_epoch = {});

/// Stratified seeded split; returns indices of the held-out part.
std::vector<std::size_t> stratified_holdout(std::span<const Sample> data, double fraction,
                                            std::uint64_t seed);

}  // namespace tspn
