#include "examples.hpp"

#include <algorithm>
#include <cmath>

#include "tspn/spn/feature_tensor.hpp"

namespace tspn::testing {

namespace {

NodeId binary_sum(SpnGraph& g, NodeId pos, NodeId neg, double w_pos, double w_neg) {
  return g.add_sum({pos, neg}, {w_pos, w_neg});
}

struct ClassParams {
  double prior, g, p;
};

SpnGraph example(const std::vector<ClassParams>& classes) {
  SpnGraph g;
  g.set_label(kY, static_cast<std::uint32_t>(classes.size()));
  const NodeId gp = g.add_indicator(kG, 1);
  const NodeId gn = g.add_indicator(kG, 0);
  const NodeId pp = g.add_indicator(kP, 1);
  const NodeId pn = g.add_indicator(kP, 0);
  std::vector<NodeId> kids;
  std::vector<double> w;
  for (std::uint32_t c = 0; c < classes.size(); ++c) {
    const NodeId y = g.add_indicator(kY, c);
    const NodeId sg = binary_sum(g, gp, gn, classes[c].g, 1.0 - classes[c].g);
    const NodeId sp = binary_sum(g, pp, pn, classes[c].p, 1.0 - classes[c].p);
    kids.push_back(g.add_product({y, sg, sp}));
    w.push_back(classes[c].prior);
  }
  g.set_root(g.add_sum(std::move(kids), std::move(w)));
  return g;
}

}  // namespace

SpnGraph two_class_example() { return example({{0.2, 0.9, 0.1}, {0.8, 0.5, 0.3}}); }

SpnGraph three_class_example() { return example({{0.2, 0.5, 0.4}, {0.408, 0.5, 0.6}, {0.392, 0.5, 0.6}}); }

Evidence gp_evidence(const SpnGraph& graph, int g, int p) {
  Evidence e = Evidence::marginal(graph);
  e.observe(kG, static_cast<std::uint32_t>(g), 2);
  e.observe(kP, static_cast<std::uint32_t>(p), 2);
  return e;
}

double naive_value(const SpnGraph& graph, const std::vector<int>& assignment, const FeatureTensor* x, bool max) {
  std::vector<double> memo(graph.size(), std::nan(""));
  std::function<double(NodeId)> value = [&](NodeId id) -> double {
    double& m = memo[id.index];
    if (!std::isnan(m)) return m;
    const Node& n = graph.node(id);
    double v = 0.0;
    switch (n.kind) {
      case NodeKind::Indicator: {
        const int a = n.variable < assignment.size() ? assignment[n.variable] : -1;
        v = (a < 0 || static_cast<std::uint32_t>(a) == n.value) ? 1.0 : 0.0;
        break;
      }
      case NodeKind::Feature: {
        if (x == nullptr) {
          v = 1.0;
        } else {
          const auto t = graph.template_at(n.templ);
          double dot = 0.0;
          for (std::size_t k = 0; k < t.size(); ++k) dot += t[k] * x->at(n.row, n.col, k);
          v = std::exp(dot);
        }
        break;
      }
      case NodeKind::Product:
        v = 1.0;
        for (NodeId c : n.children) v *= value(c);
        break;
      case NodeKind::Sum:
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          const double t = n.weights[i] * value(n.children[i]);
          v = max ? std::max(v, t) : v + t;
        }
        break;
    }
    m = v;
    return v;
  };
  return value(graph.root());
}

double enumerate(const SpnGraph& graph, std::vector<int> fixed, const FeatureTensor* x, bool max) {
  std::vector<std::uint32_t> free;
  for (std::uint32_t v = 0; v < fixed.size(); ++v) {
    if (fixed[v] < 0) free.push_back(v);
  }
  double acc = 0.0;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == free.size()) {
      const double v = naive_value(graph, fixed, x, max);
      acc = max ? std::max(acc, v) : acc + v;
      return;
    }
    const std::uint32_t var = free[i];
    for (std::uint32_t val = 0; val < graph.cardinality(var); ++val) {
      fixed[var] = static_cast<int>(val);
      rec(i + 1);
    }
    fixed[var] = -1;
  };
  rec(0);
  return acc;
}

double central_difference(const std::function<double(double)>& f, double h) { return (f(h) - f(-h)) / (2.0 * h); }

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace tspn::testing
