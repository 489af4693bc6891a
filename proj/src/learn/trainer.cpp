#include "tspn/learn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace tspn {

TrainingDiverged::TrainingDiverged(std::size_t sample_index, const std::string& what)
    : std::runtime_error(what), sample_index_(sample_index) {}

namespace {

void apply_step(SpnGraph& graph, const ParamGradient& grad, double step, const TrainingConfig& config) {
  auto nodes = graph.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Node& n = nodes[i];
    if (n.kind == NodeKind::Sum) {
      for (std::size_t j = 0; j < n.weights.size(); ++j) {
        n.weights[j] = std::max(n.weights[j] + step * grad.edges[i][j], config.weight_floor);
      }
    }
  }
  if (!config.learn_templates) return;
  for (std::uint32_t t = 0; t < graph.template_count(); ++t) {
    auto values = graph.template_at(t);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += step * grad.templates[t][k];
  }
}

EpochMetrics measure(Objective objective, const SpnGraph& graph, const Schedule& schedule,
                     std::span<const Sample> data, const TrainingConfig& config,
                     std::uint32_t epoch) {
  const ObjectiveValue v = objective == Objective::MaxMargin
                               ? mm_objective_value(graph, schedule, data, config)
                               : cll_objective_value(graph, schedule, data, config);
  EpochMetrics m;
  m.epoch = epoch;
  m.objective = v.value;
  m.train_accuracy = static_cast<double>(v.correct) / static_cast<double>(v.samples);
  m.weight_norm = std::sqrt(weight_squared_norm(graph));
  return m;
}

}  // namespace

std::vector<EpochMetrics> train_with(Objective objective, SpnGraph& graph,
                                     std::span<const Sample> data, const TrainingConfig& config,
                                     const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("empty training set");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].label >= graph.label_count()) {
      throw std::out_of_range("sample " + std::to_string(i) + " has label " +
                              std::to_string(data[i].label) + " but the model has " +
                              std::to_string(graph.label_count()) + " classes");
    }
  }
  const Schedule schedule = make_schedule(graph);
  std::vector<EpochMetrics> metrics;
  metrics.push_back(measure(objective, graph, schedule, data, config, 0));
  if (on_epoch) on_epoch(metrics.back());

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double n = static_cast<double>(data.size());
  std::uint64_t step = 0;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto one = data.subspan(idx, 1);
      ObjectiveGradient og = objective == Objective::MaxMargin
                                 ? mm_objective(graph, schedule, one, config)
                                 : cll_objective(graph, schedule, one, config);
      if (std::isnan(og.objective.value)) {
        throw TrainingDiverged(idx, "objective became NaN at sample " + std::to_string(idx) +
                                        " (epoch " + std::to_string(epoch) + ")");
      }
      const double rate =
          config.decay ? config.alpha / (1.0 + static_cast<double>(step) / n) : config.alpha;
      apply_step(graph, og.gradient, rate, config);
      ++step;
    }
    metrics.push_back(measure(objective, graph, schedule, data, config, epoch));
    if (std::isnan(metrics.back().objective)) {
      throw TrainingDiverged(order.back(), "objective became NaN after epoch " + std::to_string(epoch));
    }
    if (on_epoch) on_epoch(metrics.back());
  }
  return metrics;
}

std::vector<EpochMetrics> train(SpnGraph& graph, std::span<const Sample> data,
                                const TrainingConfig& config, const EpochCallback& on_epoch) {
  return train_with(Objective::MaxMargin, graph, data, config, on_epoch);
}

std::vector<EpochMetrics> cll_train(SpnGraph& graph, std::span<const Sample> data,
                                    const TrainingConfig& config, const EpochCallback& on_epoch) {
  return train_with(Objective::ConditionalLikelihood, graph, data, config, on_epoch);
}

void write_metrics_csv(std::ostream& os, std::span<const EpochMetrics> metrics) {
  os << "epoch,objective,train_accuracy,weight_norm\n";
  char buf[160];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%u,%.17g,%.17g,%.17g\n", m.epoch, m.objective, m.train_accuracy,
                  m.weight_norm);
    os << buf;
  }
}

}  // namespace tspn
