#include "tspn/spn/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tspn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace

ParamGradient ParamGradient::zeros_like(const SpnGraph& graph) {
  ParamGradient g;
  g.edges.resize(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.nodes()[i];
    if (n.kind == NodeKind::Sum) g.edges[i].assign(n.children.size(), 0.0);
  }
  g.templates.resize(graph.template_count());
  for (std::uint32_t t = 0; t < graph.template_count(); ++t) {
    g.templates[t].assign(graph.template_at(t).size(), 0.0);
  }
  return g;
}

void ParamGradient::clear() {
  for (auto& e : edges) std::fill(e.begin(), e.end(), 0.0);
  for (auto& t : templates) std::fill(t.begin(), t.end(), 0.0);
}

void ParamGradient::add_scaled(const ParamGradient& other, double scale) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = 0; j < edges[i].size(); ++j) edges[i][j] += scale * other.edges[i][j];
  }
  for (std::size_t i = 0; i < templates.size(); ++i) {
    for (std::size_t k = 0; k < templates[i].size(); ++k) templates[i][k] += scale * other.templates[i][k];
  }
}

double ParamGradient::squared_norm() const {
  double acc = 0.0;
  for (const auto& e : edges) for (double v : e) acc += v * v;
  for (const auto& t : templates) for (double v : t) acc += v * v;
  return acc;
}

bool ParamGradient::all_zero() const {
  for (const auto& e : edges) for (double v : e) if (v != 0.0) return false;
  for (const auto& t : templates) for (double v : t) if (v != 0.0) return false;
  return true;
}

double GradientTape::weight_grad(const SpnGraph& graph, NodeId sum, std::size_t child) const {
  if (degenerate) return 0.0;
  const Node& n = graph.node(sum);
  if (n.kind != NodeKind::Sum || child >= n.children.size()) {
    throw StructuralError(sum, "not a sum edge");
  }
  const std::int32_t win = route(sum.index);
  if (win >= 0 && static_cast<std::size_t>(win) != child) return 0.0;
  return std::exp(log_values[n.children[child].index] + log_adjoints[sum.index]);
}

ParamGradient GradientTape::gradients(const SpnGraph& graph) const {
  ParamGradient g = ParamGradient::zeros_like(graph);
  if (degenerate) return g;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.nodes()[i];
    const double adj = log_adjoints[i];
    if (adj == kNegInf) continue;
    if (n.kind == NodeKind::Sum) {
      const std::int32_t win = route(i);
      for (std::size_t j = 0; j < n.children.size(); ++j) {
        if (win >= 0 && static_cast<std::int32_t>(j) != win) continue;
        g.edges[i][j] = std::exp(log_values[n.children[j].index] + adj);
      }
    } else if (n.kind == NodeKind::Feature && features != nullptr) {
      const double scale = std::exp(log_values[i] + adj);
      const auto x = features->cell(n.row, n.col);
      auto& t = g.templates[n.templ];
      for (std::size_t k = 0; k < t.size(); ++k) t[k] += scale * x[k];
    }
  }
  return g;
}

void GradientTape::accumulate_log_gradient(const SpnGraph& graph, double coef,
                                           ParamGradient& out) const {
  if (degenerate || coef == 0.0) return;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.nodes()[i];
    const double adj = log_adjoints[i];
    if (adj == kNegInf) continue;
    if (n.kind == NodeKind::Sum) {
      const std::int32_t win = route(i);
      for (std::size_t j = 0; j < n.children.size(); ++j) {
        if (win >= 0 && static_cast<std::int32_t>(j) != win) continue;
        const double v = log_values[n.children[j].index];
        if (v == kNegInf) continue;
        out.edges[i][j] += coef * std::exp(v + adj - root_log_value);
      }
    } else if (n.kind == NodeKind::Feature && features != nullptr) {
      const double scale = coef * std::exp(log_values[i] + adj - root_log_value);
      const auto x = features->cell(n.row, n.col);
      auto& t = out.templates[n.templ];
      for (std::size_t k = 0; k < t.size(); ++k) t[k] += scale * x[k];
    }
  }
}

GradientTape soft_backward(const SpnGraph& graph, const Schedule& schedule, const ForwardPass& pass,
                           const Evidence& evidence) {
  GradientTape tape;
  tape.log_values = pass.log_values;
  if (pass.mode != Inference::Soft) tape.routes = pass.winners;
  tape.log_adjoints.assign(graph.size(), kNegInf);
  tape.features = evidence.features();
  tape.root_log_value = pass.root_value(graph);
  if (tape.root_log_value == kNegInf) {
    tape.degenerate = true;
    return tape;
  }
  auto& adj = tape.log_adjoints;
  const auto& v = tape.log_values;
  adj[graph.root().index] = 0.0;
  std::vector<double> prefix;
  for (auto it = schedule.order.rbegin(); it != schedule.order.rend(); ++it) {
    const std::uint32_t i = it->index;
    const Node& n = graph.nodes()[i];
    if (adj[i] == kNegInf) continue;
    if (n.kind == NodeKind::Sum) {
      const std::int32_t win = tape.route(i);
      for (std::size_t j = 0; j < n.children.size(); ++j) {
        if (win >= 0 && static_cast<std::int32_t>(j) != win) continue;
        const double lw = safe_log(n.weights[j]);
        if (lw == kNegInf) continue;
        auto& a = adj[n.children[j].index];
        a = log_add(a, lw + adj[i]);
      }
    } else if (n.kind == NodeKind::Product) {
      // Sibling products as prefix/suffix sums of child log-values.
      const std::size_t k = n.children.size();
      prefix.assign(k + 1, 0.0);
      for (std::size_t j = 0; j < k; ++j) prefix[j + 1] = prefix[j] + v[n.children[j].index];
      double suffix = 0.0;
      for (std::size_t j = k; j-- > 0;) {
        const double others = prefix[j] + suffix;
        if (others != kNegInf) {
          auto& a = adj[n.children[j].index];
          a = log_add(a, adj[i] + others);
        }
        suffix += v[n.children[j].index];
      }
    }
  }
  return tape;
}

GradientTape soft_backward(const SpnGraph& graph, const Evidence& evidence) {
  const Schedule schedule = make_schedule(graph);
  return soft_backward(graph, schedule, forward(graph, schedule, evidence, Inference::Soft), evidence);
}

std::uint32_t MpnTrace::edge_count(NodeId sum, std::size_t child) const {
  if (sum.index >= counts.size()) return 0;
  return winners[sum.index] == static_cast<std::int32_t>(child) ? counts[sum.index] : 0;
}

MpnTrace mpn_trace(const SpnGraph& graph, const Schedule& schedule, const ForwardPass& hard_pass,
                   const FeatureTensor* features) {
  if (hard_pass.mode != Inference::Hard) throw std::invalid_argument("mpn_trace needs a hard pass");
  MpnTrace trace;
  trace.log_value = hard_pass.root_value(graph);
  trace.winners = hard_pass.winners;
  trace.counts.assign(graph.size(), 0);
  trace.features = features;
  if (trace.log_value == kNegInf) return trace;
  trace.counts[graph.root().index] = 1;
  for (auto it = schedule.order.rbegin(); it != schedule.order.rend(); ++it) {
    const std::uint32_t i = it->index;
    const std::uint32_t c = trace.counts[i];
    if (c == 0) continue;
    trace.path.push_back(*it);
    const Node& n = graph.nodes()[i];
    if (n.kind == NodeKind::Sum) {
      const std::int32_t w = trace.winners[i];
      if (w >= 0) trace.counts[n.children[static_cast<std::size_t>(w)].index] += c;
    } else if (n.kind == NodeKind::Product) {
      for (NodeId ch : n.children) trace.counts[ch.index] += c;
    }
  }
  return trace;
}

MpnTrace mpn_evaluate(const SpnGraph& graph, const Schedule& schedule, const Evidence& evidence) {
  return mpn_trace(graph, schedule, forward(graph, schedule, evidence, Inference::Hard),
                   evidence.features());
}

MpnTrace mpn_evaluate(const SpnGraph& graph, const Evidence& evidence) {
  return mpn_evaluate(graph, make_schedule(graph), evidence);
}

void accumulate_mpn_log_gradient(const SpnGraph& graph, const MpnTrace& trace, double coef,
                                 ParamGradient& out) {
  for (NodeId id : trace.path) {
    const Node& n = graph.nodes()[id.index];
    const std::uint32_t c = trace.counts[id.index];
    if (n.kind == NodeKind::Sum) {
      const std::int32_t w = trace.winners[id.index];
      if (w < 0) continue;
      const double weight = n.weights[static_cast<std::size_t>(w)];
      if (!(weight > 0.0)) {
        throw UndefinedGradient("winning weight " + std::to_string(weight) + " at node " +
                                std::to_string(id.index));
      }
      out.edges[id.index][static_cast<std::size_t>(w)] += coef * c / weight;
    } else if (n.kind == NodeKind::Feature && trace.features != nullptr) {
      const auto x = trace.features->cell(n.row, n.col);
      auto& t = out.templates[n.templ];
      for (std::size_t k = 0; k < t.size(); ++k) t[k] += coef * c * x[k];
    }
  }
}

ParamGradient mpn_log_gradient(const SpnGraph& graph, const MpnTrace& trace) {
  ParamGradient g = ParamGradient::zeros_like(graph);
  accumulate_mpn_log_gradient(graph, trace, 1.0, g);
  return g;
}

void accumulate_pass_log_gradient(const SpnGraph& graph, const Schedule& schedule,
                                  const ForwardPass& pass, const Evidence& evidence, double coef,
                                  ParamGradient& out) {
  if (coef == 0.0) return;
  if (pass.mode == Inference::Hard) {
    accumulate_mpn_log_gradient(graph, mpn_trace(graph, schedule, pass, evidence.features()), coef, out);
  } else {
    soft_backward(graph, schedule, pass, evidence).accumulate_log_gradient(graph, coef, out);
  }
}

CllGradient cll_gradient(const SpnGraph& graph, const Schedule& schedule, const Evidence& base,
                         std::uint32_t label, Inference mode) {
  if (label >= graph.label_count()) throw std::out_of_range("label out of range");
  CllGradient result;
  result.gradient = ParamGradient::zeros_like(graph);
  const Evidence clamped = clamp_label(graph, base, label);
  Evidence all = base;
  all.marginalize(graph.label_variable(), graph.label_count());
  const ForwardPass num = forward(graph, schedule, clamped, mode);
  const ForwardPass den = forward(graph, schedule, all, mode);
  const double lnum = num.root_value(graph);
  const double lden = den.root_value(graph);
  if (lnum == kNegInf) {
    result.ok = false;
    result.log_likelihood = kNegInf;
    return result;
  }
  result.log_likelihood = lnum - lden;
  accumulate_pass_log_gradient(graph, schedule, num, clamped, 1.0, result.gradient);
  accumulate_pass_log_gradient(graph, schedule, den, all, -1.0, result.gradient);
  return result;
}

CllGradient cll_gradient(const SpnGraph& graph, const FeatureTensor& x, std::uint32_t label,
                         Inference mode) {
  return cll_gradient(graph, make_schedule(graph), Evidence::with_features(graph, x), label, mode);
}

}  // namespace tspn
