#include "tspn/structure/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace tspn {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Spn: return "spn";
    case Variant::SpnMm: return "spn_mm";
    case Variant::Tspn: return "tspn";
    case Variant::TspnMm: return "tspn_mm";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "spn") return Variant::Spn;
  if (name == "spn_mm") return Variant::SpnMm;
  if (name == "tspn") return Variant::Tspn;
  if (name == "tspn_mm") return Variant::TspnMm;
  throw std::invalid_argument("unknown variant '" + name + "' (spn, spn_mm, tspn, tspn_mm)");
}

bool is_tree(Variant v) { return v == Variant::Tspn || v == Variant::TspnMm; }

Objective objective_of(Variant v) {
  return v == Variant::SpnMm || v == Variant::TspnMm ? Objective::MaxMargin
                                                     : Objective::ConditionalLikelihood;
}

std::vector<std::size_t> stratified_holdout(std::span<const Sample> data, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("holdout fraction must be in (0, 1)");
  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  std::mt19937_64 rng(seed ^ 0x686f6c64ULL);
  std::vector<std::size_t> held;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) k = std::clamp<std::size_t>(k, 1, idx.size() - 1);
    else k = 0;
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(held.begin(), held.end());
  return held;
}

PipelineResult run_variant(Variant variant, std::span<const Sample> data, const PipelineConfig& config,
                           const EpochCallback& on_epoch) {
  if (data.empty()) throw std::invalid_argument("empty training set");
  PipelineResult out;
  const Objective objective = objective_of(variant);

  if (is_tree(variant)) {
    const auto held = stratified_holdout(data, config.holdout, config.training.seed);
    std::vector<Sample> fit;
    std::vector<Sample> score;
    std::size_t h = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (h < held.size() && held[h] == i) {
        score.push_back(data[i]);
        ++h;
      } else {
        fit.push_back(data[i]);
      }
    }
    SpnGraph plain = build_flat(config.arch);
    train_with(Objective::ConditionalLikelihood, plain, fit, config.training);
    ConfusionMatrix cm = confusion(plain, score, config.training.inference);
    out.preliminary = cm;
    try {
      const std::uint32_t size = config.subset_size.value_or(default_subset_size(cm));
      ConfusionSubset subset = select_confused(cm, std::min(size, cm.classes()));
      std::string warning;
      out.model = build_tspn(config.arch, subset, &warning);
      if (!warning.empty()) out.notes.push_back(warning);
      out.notes.push_back("subset " + subset_record(subset));
      if (subset.classes.size() < config.arch.classes) out.subset = subset;
    } catch (const NoConfusion&) {
      out.notes.push_back("preliminary SPN made no mistakes on the held-out part; training the flat model");
      out.model = build_flat(config.arch);
    }
  } else {
    out.model = build_flat(config.arch);
  }
  out.metrics = train_with(objective, out.model, data, config.training, on_epoch);
  return out;
}

}  // namespace tspn
