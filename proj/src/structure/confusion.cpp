#include "tspn/structure/confusion.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "tspn/spn/labels.hpp"

namespace tspn {

ConfusionMatrix ConfusionMatrix::zeros(std::uint32_t classes) {
  ConfusionMatrix cm;
  cm.counts.assign(classes, std::vector<std::uint64_t>(classes, 0));
  return cm;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return t;
}

std::uint64_t ConfusionMatrix::row_total(std::uint32_t truth) const {
  const auto& row = counts.at(truth);
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

double ConfusionMatrix::accuracy() const {
  const std::uint64_t t = total();
  if (t == 0) return 0.0;
  std::uint64_t diag = 0;
  for (std::uint32_t i = 0; i < classes(); ++i) diag += counts[i][i];
  return static_cast<double>(diag) / static_cast<double>(t);
}

std::uint64_t ConfusionMatrix::pair(std::uint32_t a, std::uint32_t b) const {
  return counts.at(a).at(b) + counts.at(b).at(a);
}

ConfusionMatrix confusion(const SpnGraph& graph, std::span<const Sample> data, Inference mode) {
  if (data.empty()) throw std::invalid_argument("confusion matrix of an empty dataset");
  const Schedule schedule = make_schedule(graph);
  ConfusionMatrix cm = ConfusionMatrix::zeros(graph.label_count());
  for (const Sample& s : data) {
    if (s.label >= graph.label_count()) throw std::out_of_range("sample label outside the model's classes");
    ++cm.counts[s.label][predict(graph, schedule, s.x, mode)];
  }
  return cm;
}

ConfusionSubset select_confused(const ConfusionMatrix& cm, std::uint32_t size) {
  const std::uint32_t c = cm.classes();
  if (size < 2 || size > c) {
    throw std::invalid_argument("subset size must be in [2, " + std::to_string(c) + "]");
  }
  std::uint32_t best_a = 0;
  std::uint32_t best_b = 1;
  std::uint64_t best = 0;
  bool any = false;
  for (std::uint32_t a = 0; a < c; ++a) {
    for (std::uint32_t b = a + 1; b < c; ++b) {
      const std::uint64_t v = cm.pair(a, b);
      if (v > best || (!any && v == best)) {
        best = v;
        best_a = a;
        best_b = b;
        any = true;
      }
    }
  }
  if (best == 0) throw NoConfusion();

  ConfusionSubset s;
  s.classes = {best_a, best_b};
  s.score = best;
  std::vector<bool> in(c, false);
  in[best_a] = in[best_b] = true;
  while (s.classes.size() < size) {
    std::uint32_t pick = c;
    std::uint64_t gain = 0;
    for (std::uint32_t k = 0; k < c; ++k) {
      if (in[k]) continue;
      std::uint64_t v = 0;
      for (std::uint32_t m : s.classes) v += cm.pair(k, m);
      if (pick == c || v > gain) {
        pick = k;
        gain = v;
      }
    }
    in[pick] = true;
    s.classes.push_back(pick);
    s.score += gain;
  }
  std::sort(s.classes.begin(), s.classes.end());
  return s;
}

std::uint32_t default_subset_size(const ConfusionMatrix& cm) {
  const std::uint32_t c = cm.classes();
  if (c < 2) throw std::invalid_argument("need at least two classes");
  std::vector<std::uint64_t> pairs;
  for (std::uint32_t a = 0; a < c; ++a) {
    for (std::uint32_t b = a + 1; b < c; ++b) pairs.push_back(cm.pair(a, b));
  }
  const ConfusionSubset seed = select_confused(cm, 2);
  std::vector<std::uint64_t> sorted = pairs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                                   : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
  const double cut = std::max(median, 0.25 * static_cast<double>(sorted.back()));

  std::vector<bool> seen(c, false);
  std::vector<std::uint32_t> stack{seed.classes[0]};
  seen[seed.classes[0]] = true;
  std::uint32_t size = 0;
  while (!stack.empty()) {
    const std::uint32_t a = stack.back();
    stack.pop_back();
    ++size;
    for (std::uint32_t b = 0; b < c; ++b) {
      if (!seen[b] && b != a && static_cast<double>(cm.pair(a, b)) > cut) {
        seen[b] = true;
        stack.push_back(b);
      }
    }
  }
  // The seed pair clears the cut unless every pair ties; keep at least two.
  return std::max<std::uint32_t>(size, 2);
}

std::string subset_record(const ConfusionSubset& subset) {
  std::string out = "{classes: [";
  for (std::size_t i = 0; i < subset.classes.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(subset.classes[i]);
  }
  out += "], score: " + std::to_string(subset.score) + "}";
  return out;
}

void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm, std::span<const std::string> names) {
  if (names.size() != cm.classes()) throw std::invalid_argument("one class name per row expected");
  os << "true\\predicted";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::uint32_t t = 0; t < cm.classes(); ++t) {
    os << names[t];
    for (std::uint64_t v : cm.counts[t]) os << ',' << v;
    os << '\n';
  }
}

StagedDecision classify_multistage(const SpnGraph& graph, const Schedule& schedule,
                                   const FeatureTensor& x, Inference mode) {
  const LabelBranches branches = label_branches(graph);
  const auto scores = class_scores(graph, schedule, Evidence::with_features(graph, x), mode);

  // Stage 1: the branch whose best member beats every other branch's best.
  StagedDecision d;
  double top = 0.0;
  bool first = true;
  for (std::uint32_t b = 0; b < branches.groups.size(); ++b) {
    for (std::uint32_t y : branches.groups[b]) {
      const bool better = first || scores[y] > top || (scores[y] == top && y < d.label);
      if (better) {
        top = scores[y];
        d.branch = b;
        d.label = y;
        first = false;
      }
    }
  }
  const auto& group = branches.groups[d.branch];
  if (group.size() == 1) return d;

  // Stage 2: argmax inside the merged group, lowest label on ties.
  d.stages = 2;
  std::uint32_t pick = group.front();
  for (std::uint32_t y : group) {
    if (scores[y] > scores[pick]) pick = y;
  }
  d.label = pick;
  return d;
}

}  // namespace tspn
