#include <doctest.h>

#include <cmath>
#include <random>

#include "examples.hpp"
#include "synthetic.hpp"
#include "tspn/spn/evaluate.hpp"
#include "tspn/spn/gradient.hpp"
#include "tspn/spn/validate.hpp"

using namespace tspn;
using namespace tspn::testing;

namespace {

std::vector<std::pair<std::uint32_t, std::size_t>> sum_edges(const SpnGraph& g) {
  std::vector<std::pair<std::uint32_t, std::size_t>> out;
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(NodeId{i});
    if (n.kind == NodeKind::Sum) {
      for (std::size_t j = 0; j < n.children.size(); ++j) out.emplace_back(i, j);
    }
  }
  return out;
}

double perturbed(SpnGraph g, std::uint32_t node, std::size_t j, double h,
                 const std::function<double(const SpnGraph&)>& f) {
  g.node(NodeId{node}).weights[j] += h;
  return f(g);
}

}  // namespace

TEST_CASE("soft_backward on the two-class example") {
  const SpnGraph g = two_class_example();
  const NodeId root = g.root();
  const auto all = soft_backward(g, Evidence::marginal(g));
  CHECK(all.weight_grad(g, root, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::exp(all.log_adjoints[root.index]) == doctest::Approx(1.0));
  const auto obs = soft_backward(g, gp_evidence(g, 1, 1));
  CHECK(obs.weight_grad(g, root, 0) == doctest::Approx(0.09).epsilon(1e-14));
}

TEST_CASE("soft_backward matches finite differences on random networks") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    const SpnGraph g = random_spn(rng, 6, 50);
    Evidence e = Evidence::marginal(g);
    e.observe(0, 1, 2);
    e.observe(3, 0, 2);
    const auto tape = soft_backward(g, e);
    for (auto [node, j] : sum_edges(g)) {
      auto f = [&](const SpnGraph& h) { return std::exp(evaluate(h, e)); };
      const double fd = central_difference([&](double d) { return perturbed(g, node, j, d, f); }, 1e-6);
      const double an = tape.weight_grad(g, NodeId{node}, j);
      if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
      CHECK(rel_err(an, fd) <= 1e-5);
    }
  }
}

TEST_CASE("single-class CLL gradient vanishes") {
  SpnGraph g;
  g.set_label(0, 1);
  const std::uint32_t t = g.add_template({0.3, -0.2});
  const NodeId y = g.add_indicator(0, 0);
  const NodeId mix = g.add_sum({g.add_feature(0, 0, t), g.add_feature(0, 0, t)}, {0.4, 0.9});
  g.set_root(g.add_sum({g.add_product({y, mix})}, {0.7}));
  FeatureTensor x(1, 2);
  x.values = {0.5, 1.5};
  const auto grad = cll_gradient(g, x, 0);
  CHECK(grad.gradient.squared_norm() <= 1e-24);
  CHECK(grad.log_likelihood == doctest::Approx(0.0));
}

TEST_CASE("CLL gradient on the two-class example matches finite differences") {
  const SpnGraph g = two_class_example();
  const Schedule s = make_schedule(g);
  const Evidence e = gp_evidence(g, 1, 1);
  const auto grad = cll_gradient(g, s, e, 1);
  for (auto [node, j] : sum_edges(g)) {
    auto f = [&](const SpnGraph& h) {
      const auto sc = class_scores(h, make_schedule(h), e);
      return sc[1] - log_sum_exp(sc);
    };
    const double fd = central_difference([&](double d) { return perturbed(g, node, j, d, f); }, 1e-6);
    CHECK(grad.gradient.edges[node][j] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("symmetric two-class CLL gradient is antisymmetric at the root") {
  SpnGraph g;
  g.set_label(0, 2);
  const NodeId p1 = g.add_indicator(1, 1), p0 = g.add_indicator(1, 0);
  std::vector<NodeId> kids;
  for (std::uint32_t c = 0; c < 2; ++c) kids.push_back(g.add_product({g.add_indicator(0, c), g.add_sum({p1, p0}, {0.3, 0.7})}));
  g.set_root(g.add_sum(kids, {0.5, 0.5}));
  Evidence e = Evidence::marginal(g);
  e.observe(1, 1, 2);
  const auto grad = cll_gradient(g, make_schedule(g), e, 0);
  const auto& r = grad.gradient.edges[g.root().index];
  CHECK(r[0] == doctest::Approx(-r[1]));
  CHECK(r[0] > 0.0);
}

TEST_CASE("max-product worked values") {
  const SpnGraph g = two_class_example();
  const MpnTrace t = mpn_evaluate(g, gp_evidence(g, 1, 1));
  CHECK(std::exp(t.log_value) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(t.edge_count(g.root(), 1) == 1);
  CHECK(t.edge_count(g.root(), 0) == 0);

  SpnGraph chain;
  const NodeId leaf = chain.add_indicator(0, 1);
  const NodeId inner = chain.add_sum({leaf}, {0.5});
  chain.set_root(chain.add_sum({inner}, {0.5}));
  Evidence e = Evidence::marginal(chain);
  const MpnTrace ct = mpn_evaluate(chain, e);
  CHECK(std::exp(ct.log_value) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(ct.edge_count(inner, 0) == 1);
  CHECK(ct.edge_count(chain.root(), 0) == 1);
  const ParamGradient lg = mpn_log_gradient(chain, ct);
  CHECK(lg.edges[inner.index][0] == doctest::Approx(2.0));
}

TEST_CASE("max-product value equals the best completion") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SpnGraph g = random_spn(rng, 7, 60);
    const MpnTrace t = mpn_evaluate(g, Evidence::marginal(g));
    CHECK(rel_err(std::exp(t.log_value), enumerate(g, std::vector<int>(7, -1), nullptr, true)) <= 1e-9);
  }
}

TEST_CASE("off-path edges get zero max-product gradient") {
  const SpnGraph g = two_class_example();
  const MpnTrace t = mpn_evaluate(g, gp_evidence(g, 1, 1));
  const ParamGradient lg = mpn_log_gradient(g, t);
  CHECK(lg.edges[g.root().index][0] == 0.0);
  CHECK(lg.edges[g.root().index][1] == doctest::Approx(1.0 / 0.8));
}

TEST_CASE("max-product log gradient matches finite differences away from ties") {
  std::mt19937_64 rng(8);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const SpnGraph g = random_spn(rng, 6, 50);
    const Schedule s = make_schedule(g);
    const Evidence e = Evidence::marginal(g);
    const MpnTrace t = mpn_evaluate(g, s, e);
    const ParamGradient lg = mpn_log_gradient(g, t);
    for (auto [node, j] : sum_edges(g)) {
      const double h = 1e-7;
      auto f = [&](const SpnGraph& q) { return mpn_evaluate(q, make_schedule(q), e); };
      SpnGraph up = g, down = g;
      up.node(NodeId{node}).weights[j] += h;
      down.node(NodeId{node}).weights[j] -= h;
      const MpnTrace tu = f(up), td = f(down);
      if (tu.winners != t.winners || td.winners != t.winners) continue;  // argmax flipped
      const double fd = (tu.log_value - td.log_value) / (2 * h);
      if (lg.edges[node][j] == 0.0) {
        CHECK(std::abs(fd) <= 1e-7);
      } else {
        CHECK(rel_err(lg.edges[node][j], fd) <= 1e-5);
      }
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("template gradients match finite differences") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    SpnGraph g = random_classifier(rng, 2, 2, 3, 30);
    const FeatureTensor x = random_features(rng, 2, 3);
    const Evidence e = clamp_label(g, Evidence::with_features(g, x), 1);
    const auto tape = soft_backward(g, e);
    const ParamGradient pg = tape.gradients(g);
    for (std::uint32_t t = 0; t < g.template_count(); ++t) {
      for (std::size_t k = 0; k < 3; ++k) {
        auto f = [&](double d) {
          SpnGraph h = g;
          h.template_at(t)[k] += d;
          return std::exp(evaluate(h, e));
        };
        CHECK(rel_err(pg.templates[t][k], central_difference(f, 1e-6)) <= 1e-5);
      }
    }
  }
}
