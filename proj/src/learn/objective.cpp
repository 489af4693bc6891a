#include "tspn/learn/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "tspn/learn/margin.hpp"

namespace tspn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Score of a label group and d(score)/d(log S[y]) for its members.
struct GroupScore {
  double value = -kInf;
  std::vector<std::pair<std::uint32_t, double>> weights;
};

GroupScore group_score(const std::vector<double>& scores, const std::vector<std::uint32_t>& labels,
                       Inference mode) {
  GroupScore g;
  // Under mixed inference the merged branch's sum sits above label indicators
  // and stays soft, like the root.
  if (mode == Inference::Hard || labels.size() == 1) {
    std::uint32_t best = labels.front();
    for (std::uint32_t y : labels) {
      if (scores[y] > scores[best]) best = y;
    }
    g.value = scores[best];
    g.weights.emplace_back(best, 1.0);
    return g;
  }
  std::vector<double> member;
  for (std::uint32_t y : labels) member.push_back(scores[y]);
  g.value = log_sum_exp(member);
  if (g.value == -kInf) return g;
  for (std::uint32_t y : labels) g.weights.emplace_back(y, std::exp(scores[y] - g.value));
  return g;
}

struct MarginTerm {
  GroupScore truth;
  std::vector<GroupScore> rivals;
};

std::vector<MarginTerm> margin_terms(const std::vector<double>& scores, std::uint32_t label,
                                     const LabelBranches& branches, const TrainingConfig& config) {
  const Inference mode = config.inference;
  std::vector<MarginTerm> terms;
  const auto labels = static_cast<std::uint32_t>(scores.size());
  if (config.staged_margin && branches.hierarchical()) {
    const std::uint32_t home = branches.group_of[label];
    MarginTerm outer;
    outer.truth = group_score(scores, branches.groups[home], mode);
    for (std::uint32_t g = 0; g < branches.groups.size(); ++g) {
      if (g != home) outer.rivals.push_back(group_score(scores, branches.groups[g], mode));
    }
    terms.push_back(std::move(outer));
    const auto& mates = branches.groups[home];
    if (mates.size() > 1) {
      MarginTerm inner;
      inner.truth = group_score(scores, {label}, mode);
      for (std::uint32_t y : mates) {
        if (y != label) inner.rivals.push_back(group_score(scores, {y}, mode));
      }
      terms.push_back(std::move(inner));
    }
    return terms;
  }
  MarginTerm flat;
  flat.truth = group_score(scores, {label}, mode);
  for (std::uint32_t y = 0; y < labels; ++y) {
    if (y != label) flat.rivals.push_back(group_score(scores, {y}, mode));
  }
  terms.push_back(std::move(flat));
  return terms;
}

// Softmax log margin of one term; adds scale * dD/dlog S[y] into coef.
double term_margin(const MarginTerm& term, double eta, double scale, std::vector<double>* coef) {
  std::vector<double> scaled;
  scaled.reserve(term.rivals.size());
  for (const auto& r : term.rivals) scaled.push_back(eta * r.value);
  const double lse = log_sum_exp(scaled);
  if (lse == -kInf) return term.truth.value == -kInf ? 0.0 : kInf;
  const double d = term.truth.value - lse / eta;
  if (coef != nullptr && scale != 0.0) {
    for (const auto& [y, w] : term.truth.weights) (*coef)[y] += scale * w;
    for (std::size_t b = 0; b < term.rivals.size(); ++b) {
      if (scaled[b] == -kInf) continue;
      const double p = std::exp(scaled[b] - lse);
      for (const auto& [y, w] : term.rivals[b].weights) (*coef)[y] -= scale * p * w;
    }
  }
  return d;
}

struct SampleEval {
  double objective = 0.0;
  bool correct = false;
};

std::vector<double> root_scores(const SpnGraph& graph, const LabelPasses& passes) {
  std::vector<double> scores;
  scores.reserve(passes.per_label.size());
  for (const auto& p : passes.per_label) scores.push_back(p.root_value(graph));
  return scores;
}

void check_sample(const SpnGraph& graph, const Sample& s) {
  if (s.label >= graph.label_count()) {
    throw std::out_of_range("sample label " + std::to_string(s.label) + " outside the model's " +
                            std::to_string(graph.label_count()) + " classes");
  }
}

SampleEval mm_sample(const SpnGraph& graph, const Schedule& schedule, const LabelBranches& branches,
                     const Sample& sample, const TrainingConfig& config, ParamGradient* grad) {
  check_sample(graph, sample);
  const Evidence base = Evidence::with_features(graph, sample.x);
  const LabelPasses passes = label_passes(graph, schedule, base, config.inference);
  const auto scores = root_scores(graph, passes);

  SampleEval out;
  out.correct = argmax_label(scores) == sample.label;
  std::vector<double> coef(scores.size(), 0.0);
  for (const auto& term : margin_terms(scores, sample.label, branches, config)) {
    // First pass for the value; the hinge slope decides the gradient scale.
    const double d = term_margin(term, config.eta, 0.0, nullptr);
    const HingeValue h = square_hinge(config.lambda * d);
    out.objective += h.value;
    if (grad != nullptr && h.derivative != 0.0) {
      term_margin(term, config.eta, h.derivative * config.lambda, &coef);
    }
  }
  if (grad != nullptr) {
    for (std::uint32_t y = 0; y < coef.size(); ++y) {
      if (coef[y] == 0.0) continue;
      accumulate_pass_log_gradient(graph, schedule, passes.per_label[y],
                                   clamp_label(graph, base, y), coef[y], *grad);
    }
  }
  return out;
}

SampleEval cll_sample(const SpnGraph& graph, const Schedule& schedule, const Sample& sample,
                      const TrainingConfig& config, ParamGradient* grad) {
  check_sample(graph, sample);
  const Evidence base = Evidence::with_features(graph, sample.x);
  const LabelPasses passes = label_passes(graph, schedule, base, config.inference);
  const auto scores = root_scores(graph, passes);
  const double joint = scores[sample.label];
  const double total = passes.marginal.root_value(graph);

  SampleEval out;
  out.correct = argmax_label(scores) == sample.label;
  out.objective = joint == -kInf ? -kInf : joint - total;
  if (grad != nullptr && joint != -kInf) {
    Evidence all = base;
    all.marginalize(graph.label_variable(), graph.label_count());
    accumulate_pass_log_gradient(graph, schedule, passes.per_label[sample.label],
                                 clamp_label(graph, base, sample.label), 1.0, *grad);
    accumulate_pass_log_gradient(graph, schedule, passes.marginal, all, -1.0, *grad);
  }
  return out;
}

void add_regularizer(const SpnGraph& graph, double beta, ObjectiveValue& value, ParamGradient* grad) {
  if (beta == 0.0) return;
  value.value -= beta * weight_squared_norm(graph);
  if (grad == nullptr) return;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.nodes()[i];
    if (n.kind != NodeKind::Sum) continue;
    for (std::size_t j = 0; j < n.weights.size(); ++j) grad->edges[i][j] -= 2.0 * beta * n.weights[j];
  }
}

template <typename Fn>
ObjectiveValue run_batch(std::span<const Sample> batch, Fn&& fn) {
  ObjectiveValue v;
  for (const Sample& s : batch) {
    const SampleEval e = fn(s);
    v.value += e.objective;
    v.correct += e.correct ? 1 : 0;
    ++v.samples;
  }
  return v;
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(eta >= 1.0)) throw std::invalid_argument("eta must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (!(weight_floor > 0.0)) throw std::invalid_argument("weight floor must be > 0");
}

double weight_squared_norm(const SpnGraph& graph) {
  double acc = 0.0;
  for (const Node& n : graph.nodes()) {
    if (n.kind == NodeKind::Sum) for (double w : n.weights) acc += w * w;
  }
  return acc;
}

ObjectiveGradient mm_objective(const SpnGraph& graph, const Schedule& schedule,
                               std::span<const Sample> batch, const TrainingConfig& config) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const LabelBranches branches = label_branches(graph);
  ObjectiveGradient out;
  out.gradient = ParamGradient::zeros_like(graph);
  out.objective = run_batch(batch, [&](const Sample& s) {
    return mm_sample(graph, schedule, branches, s, config, &out.gradient);
  });
  add_regularizer(graph, config.beta, out.objective, &out.gradient);
  return out;
}

ObjectiveValue mm_objective_value(const SpnGraph& graph, const Schedule& schedule,
                                  std::span<const Sample> batch, const TrainingConfig& config) {
  config.validate();
  const LabelBranches branches = label_branches(graph);
  ObjectiveValue v = run_batch(batch, [&](const Sample& s) {
    return mm_sample(graph, schedule, branches, s, config, nullptr);
  });
  add_regularizer(graph, config.beta, v, nullptr);
  return v;
}

ObjectiveGradient cll_objective(const SpnGraph& graph, const Schedule& schedule,
                                std::span<const Sample> batch, const TrainingConfig& config) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("empty batch");
  ObjectiveGradient out;
  out.gradient = ParamGradient::zeros_like(graph);
  out.objective = run_batch(batch, [&](const Sample& s) {
    return cll_sample(graph, schedule, s, config, &out.gradient);
  });
  add_regularizer(graph, config.beta, out.objective, &out.gradient);
  return out;
}

ObjectiveValue cll_objective_value(const SpnGraph& graph, const Schedule& schedule,
                                   std::span<const Sample> batch, const TrainingConfig& config) {
  config.validate();
  ObjectiveValue v = run_batch(batch, [&](const Sample& s) {
    return cll_sample(graph, schedule, s, config, nullptr);
  });
  add_regularizer(graph, config.beta, v, nullptr);
  return v;
}

std::uint32_t predict(const SpnGraph& graph, const Schedule& schedule, const FeatureTensor& x,
                      Inference mode) {
  return argmax_label(class_scores(graph, schedule, Evidence::with_features(graph, x), mode));
}

double accuracy(const SpnGraph& graph, std::span<const Sample> data, Inference mode) {
  if (data.empty()) return 0.0;
  const Schedule schedule = make_schedule(graph);
  std::size_t hits = 0;
  for (const Sample& s : data) hits += predict(graph, schedule, s.x, mode) == s.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace tspn
