#include "tspn/spn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tspn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

void check_features(const Schedule& schedule, const Evidence& evidence) {
  if (schedule.feature_depth == 0) return;
  const FeatureTensor* x = evidence.features();
  if (x == nullptr) {
    if (!evidence.features_marginal()) {
      throw IncompleteEvidence("graph has feature leaves but no feature tensor was given");
    }
    return;
  }
  if (x->grid != schedule.feature_grid || x->depth != schedule.feature_depth) {
    throw ShapeError("feature tensor is " + std::to_string(x->grid) + "x" +
                     std::to_string(x->grid) + "x" + std::to_string(x->depth) +
                     " but the graph expects " + std::to_string(schedule.feature_grid) + "x" +
                     std::to_string(schedule.feature_grid) + "x" +
                     std::to_string(schedule.feature_depth));
  }
}

void compute_node(const SpnGraph& graph, const Schedule& schedule, NodeId id, const Evidence& evidence,
                  ForwardPass& pass) {
  const Node& n = graph.nodes()[id.index];
  auto& v = pass.log_values;
  double out = kNegInf;
  switch (n.kind) {
    case NodeKind::Indicator:
      out = safe_log(evidence.indicator(n.variable, n.value));
      break;
    case NodeKind::Feature:
      if (const FeatureTensor* x = evidence.features()) {
        const auto cell = x->cell(n.row, n.col);
        const auto t = graph.template_at(n.templ);
        out = std::inner_product(t.begin(), t.end(), cell.begin(), 0.0);
      } else {
        out = 0.0;
      }
      break;
    case NodeKind::Product: {
      double acc = 0.0;
      for (NodeId c : n.children) acc += v[c.index];
      // -inf + finite stays -inf; no +inf arises from finite inputs.
      out = std::isnan(acc) ? kNegInf : acc;
      break;
    }
    case NodeKind::Sum: {
      const std::size_t k = n.children.size();
      const bool max_node = pass.mode == Inference::Hard ||
                            (pass.mode == Inference::Mixed && !schedule.label_dependent[id.index]);
      if (max_node) {
        std::int32_t best = -1;
        for (std::size_t j = 0; j < k; ++j) {
          const double term = safe_log(n.weights[j]) + v[n.children[j].index];
          if (term == kNegInf || std::isnan(term)) continue;
          if (best < 0 || term > out ||
              (term == out && n.children[j].index < n.children[static_cast<std::size_t>(best)].index)) {
            out = term;
            best = static_cast<std::int32_t>(j);
          }
        }
        pass.winners[id.index] = best;
      } else {
        double peak = kNegInf;
        for (std::size_t j = 0; j < k; ++j) {
          peak = std::max(peak, safe_log(n.weights[j]) + v[n.children[j].index]);
        }
        if (peak != kNegInf) {
          double acc = 0.0;
          for (std::size_t j = 0; j < k; ++j) {
            const double term = safe_log(n.weights[j]) + v[n.children[j].index];
            if (term != kNegInf) acc += std::exp(term - peak);
          }
          out = peak + std::log(acc);
        }
      }
      break;
    }
  }
  v[id.index] = out;
}

}  // namespace

const char* to_string(Inference mode) {
  switch (mode) {
    case Inference::Soft: return "soft";
    case Inference::Hard: return "hard";
    case Inference::Mixed: return "mixed";
  }
  return "?";
}

Inference parse_inference(const std::string& name) {
  if (name == "soft") return Inference::Soft;
  if (name == "hard") return Inference::Hard;
  if (name == "mixed") return Inference::Mixed;
  throw std::invalid_argument("unknown inference mode '" + name + "' (soft, hard, mixed)");
}

Schedule make_schedule(const SpnGraph& graph) {
  graph.check_structure();
  Schedule s;
  const auto n = graph.size();
  s.label_dependent.assign(n, 0);
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> mark(n, kWhite);
  std::vector<bool> has_label(n, false);
  struct Frame {
    std::uint32_t node;
    std::size_t next;
  };
  std::vector<Frame> stack{{graph.root().index, 0}};
  mark[graph.root().index] = kGrey;
  const bool labelled = graph.label_count() > 0;
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Node& node = graph.nodes()[f.node];
    if (f.next < node.children.size()) {
      const std::uint32_t c = node.children[f.next++].index;
      if (mark[c] == kGrey) throw StructuralError(NodeId{f.node}, "cycle through child " + std::to_string(c));
      if (mark[c] == kWhite) {
        mark[c] = kGrey;
        stack.push_back({c, 0});
      }
      continue;
    }
    mark[f.node] = kBlack;
    bool lab = labelled && node.kind == NodeKind::Indicator && node.variable == graph.label_variable();
    for (NodeId c : node.children) lab = lab || has_label[c.index];
    has_label[f.node] = lab;
    s.order.push_back(NodeId{f.node});
    if (lab) s.label_order.push_back(NodeId{f.node});
    s.label_dependent[f.node] = lab ? 1 : 0;
    if (node.kind == NodeKind::Feature) {
      s.feature_grid = std::max({s.feature_grid, node.row + 1, node.col + 1});
      s.feature_depth = graph.feature_depth();
    }
    stack.pop_back();
  }
  return s;
}

ForwardPass forward(const SpnGraph& graph, const Schedule& schedule, const Evidence& evidence,
                    Inference mode) {
  check_features(schedule, evidence);
  ForwardPass pass;
  pass.mode = mode;
  pass.log_values.assign(graph.size(), kNegInf);
  pass.winners.assign(graph.size(), -1);
  for (NodeId id : schedule.order) compute_node(graph, schedule, id, evidence, pass);
  return pass;
}

void forward_partial(const SpnGraph& graph, const Schedule& schedule, std::span<const NodeId> nodes,
                     const Evidence& evidence, ForwardPass& pass) {
  check_features(schedule, evidence);
  for (NodeId id : nodes) compute_node(graph, schedule, id, evidence, pass);
}

double evaluate(const SpnGraph& graph, const Evidence& evidence) {
  return evaluate(graph, make_schedule(graph), evidence, Inference::Soft);
}

double evaluate(const SpnGraph& graph, const Schedule& schedule, const Evidence& evidence,
                Inference mode) {
  return forward(graph, schedule, evidence, mode).root_value(graph);
}

double partition(const SpnGraph& graph) { return evaluate(graph, Evidence::marginal(graph)); }

Evidence clamp_label(const SpnGraph& graph, const Evidence& base, std::uint32_t label) {
  Evidence ev = base;
  ev.observe(graph.label_variable(), label, graph.label_count());
  return ev;
}

LabelPasses label_passes(const SpnGraph& graph, const Schedule& schedule, const Evidence& base,
                         Inference mode) {
  if (graph.label_count() == 0) throw std::invalid_argument("graph has no label variable");
  Evidence all = base;
  all.marginalize(graph.label_variable(), graph.label_count());
  LabelPasses out;
  out.marginal = forward(graph, schedule, all, mode);
  out.per_label.reserve(graph.label_count());
  for (std::uint32_t y = 0; y < graph.label_count(); ++y) {
    ForwardPass p = out.marginal;
    forward_partial(graph, schedule, schedule.label_order, clamp_label(graph, base, y), p);
    out.per_label.push_back(std::move(p));
  }
  return out;
}

std::vector<double> class_scores(const SpnGraph& graph, const FeatureTensor& x, Inference mode) {
  return class_scores(graph, make_schedule(graph), Evidence::with_features(graph, x), mode);
}

std::vector<double> class_scores(const SpnGraph& graph, const Schedule& schedule,
                                 const Evidence& base, Inference mode) {
  const auto passes = label_passes(graph, schedule, base, mode);
  std::vector<double> scores;
  scores.reserve(passes.per_label.size());
  for (const auto& p : passes.per_label) scores.push_back(p.root_value(graph));
  return scores;
}

std::uint32_t argmax_label(std::span<const double> scores) {
  std::uint32_t best = 0;
  for (std::uint32_t y = 1; y < scores.size(); ++y) {
    if (scores[y] > scores[best]) best = y;
  }
  return best;
}

double log_sum_exp(std::span<const double> values) {
  double peak = kNegInf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kNegInf) return kNegInf;
  if (peak == std::numeric_limits<double>::infinity()) return peak;
  double acc = 0.0;
  for (double v : values) {
    if (v != kNegInf) acc += std::exp(v - peak);
  }
  return peak + std::log(acc);
}

}  // namespace tspn
