#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tspn/learn/objective.hpp"
#include "tspn/structure/architecture.hpp"

namespace tspn {

class NoConfusion : public std::runtime_error {
 public:
  NoConfusion() : std::runtime_error("no confusion to exploit") {}
};

/// Rows are true classes, columns predictions.
struct ConfusionMatrix {
  std::vector<std::vector<std::uint64_t>> counts;

  static ConfusionMatrix zeros(std::uint32_t classes);
  std::uint32_t classes() const { return static_cast<std::uint32_t>(counts.size()); }
  std::uint64_t total() const;
  std::uint64_t row_total(std::uint32_t truth) const;
  double accuracy() const;
  /// counts[a][b] + counts[b][a]
  std::uint64_t pair(std::uint32_t a, std::uint32_t b) const;
};

ConfusionMatrix confusion(const SpnGraph& graph, std::span<const Sample> data,
                          Inference mode = Inference::Mixed);

/// Greedy: best symmetric pair, then repeatedly the class with the most
/// confusion against the current members. Ties go to the lowest index.
ConfusionSubset select_confused(const ConfusionMatrix& cm, std::uint32_t size);

/// Size of the connected component, containing the most confused pair, of the
/// graph whose edges are class pairs confused more than both the median pair
/// and a quarter of the most confused pair.
std::uint32_t default_subset_size(const ConfusionMatrix& cm);

/// `{classes: [a, b], score: n}`
std::string subset_record(const ConfusionSubset& subset);

/// Header row of class names, then one row per true class.
void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm,
                         std::span<const std::string> names);

struct StagedDecision {
  std::uint32_t label = 0;
  std::uint32_t branch = 0;  // index into label_branches(graph).groups
  std::uint32_t stages = 1;  // 2 when the winning branch holds several classes
};

/// Branch first, then the class inside a merged branch. A branch is scored by
/// its best member, so the result always equals argmax_label(class_scores).
StagedDecision classify_multistage(const SpnGraph& graph, const Schedule& schedule,
                                   const FeatureTensor& x, Inference mode = Inference::Mixed);

}  // namespace tspn
