#pragma once

#include <cstdint>
#include <vector>

#include "tspn/spn/feature_tensor.hpp"
#include "tspn/spn/graph.hpp"

namespace tspn {

/// Indicator values per (variable, value) plus optional feature input.
///
/// A variable whose indicators are all 1 is marginalized. Variables that were
/// never set are missing, and evaluating a leaf over a missing variable raises
/// IncompleteEvidence. Feature leaves read the attached tensor, or contribute
/// log-value 0 when features are marginalized. The tensor is not owned.
class Evidence {
 public:
  Evidence() = default;

  /// Every indicator of every variable set to 1, features marginalized.
  static Evidence marginal(const SpnGraph& graph);
  /// Hidden variables marginalized, features attached, label marginalized.
  static Evidence with_features(const SpnGraph& graph, const FeatureTensor& x);

  void set(std::uint32_t variable, std::vector<double> per_value);
  /// One-hot: indicator[value] = 1, other values 0.
  void observe(std::uint32_t variable, std::uint32_t value, std::uint32_t cardinality);
  void marginalize(std::uint32_t variable, std::uint32_t cardinality);

  void attach_features(const FeatureTensor& x) {
    features_ = &x;
    features_marginal_ = false;
  }
  void marginalize_features() {
    features_ = nullptr;
    features_marginal_ = true;
  }

  bool has(std::uint32_t variable) const {
    return variable < indicators_.size() && !indicators_[variable].empty();
  }
  /// Throws IncompleteEvidence when the variable or value is not covered.
  double indicator(std::uint32_t variable, std::uint32_t value) const;

  const FeatureTensor* features() const noexcept { return features_; }
  bool features_marginal() const noexcept { return features_marginal_; }

 private:
  std::vector<std::vector<double>> indicators_;
  const FeatureTensor* features_ = nullptr;
  bool features_marginal_ = false;
};

}  // namespace tspn
