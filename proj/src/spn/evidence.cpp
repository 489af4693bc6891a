#include "tspn/spn/evidence.hpp"

#include <string>

namespace tspn {

Evidence Evidence::marginal(const SpnGraph& graph) {
  Evidence ev;
  const std::uint32_t vars = graph.variable_count();
  for (std::uint32_t v = 0; v < vars; ++v) ev.marginalize(v, graph.cardinality(v));
  ev.marginalize_features();
  return ev;
}

Evidence Evidence::with_features(const SpnGraph& graph, const FeatureTensor& x) {
  Evidence ev = marginal(graph);
  ev.attach_features(x);
  return ev;
}

void Evidence::set(std::uint32_t variable, std::vector<double> per_value) {
  if (variable >= indicators_.size()) indicators_.resize(variable + 1);
  indicators_[variable] = std::move(per_value);
}

void Evidence::observe(std::uint32_t variable, std::uint32_t value, std::uint32_t cardinality) {
  std::vector<double> v(cardinality, 0.0);
  if (value < cardinality) v[value] = 1.0;
  set(variable, std::move(v));
}

void Evidence::marginalize(std::uint32_t variable, std::uint32_t cardinality) {
  set(variable, std::vector<double>(cardinality, 1.0));
}

double Evidence::indicator(std::uint32_t variable, std::uint32_t value) const {
  if (!has(variable)) {
    throw IncompleteEvidence("no evidence for variable " + std::to_string(variable));
  }
  const auto& v = indicators_[variable];
  if (value >= v.size()) {
    throw IncompleteEvidence("no evidence for value " + std::to_string(value) + " of variable " +
                             std::to_string(variable));
  }
  return v[value];
}

}  // namespace tspn
