#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "examples.hpp"
#include "synthetic.hpp"
#include "tspn/learn/margin.hpp"
#include "tspn/learn/objective.hpp"
#include "tspn/learn/trainer.hpp"
#include "tspn/spn/evaluate.hpp"
#include "tspn/structure/architecture.hpp"

using namespace tspn;
using namespace tspn::testing;

namespace {

ArchitectureSpec small_arch(std::uint32_t classes, std::uint32_t grid, std::uint32_t depth) {
  ArchitectureSpec a;
  a.classes = classes;
  a.parts = 2;
  a.components = 3;
  a.grid = grid;
  a.depth = depth;
  a.seed = 4;
  return a;
}

std::vector<double> flat_params(const SpnGraph& g) {
  std::vector<double> out;
  for (const Node& n : g.nodes()) {
    if (n.kind == NodeKind::Sum) out.insert(out.end(), n.weights.begin(), n.weights.end());
  }
  for (std::uint32_t t = 0; t < g.template_count(); ++t) {
    const auto v = g.template_at(t);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

// Finite-difference check of d objective / d weights for every sum edge.
void check_objective_gradient(const SpnGraph& g, const std::vector<Sample>& batch, const TrainingConfig& cfg,
                              bool mm) {
  const Schedule s = make_schedule(g);
  const ObjectiveGradient og = mm ? mm_objective(g, s, batch, cfg) : cll_objective(g, s, batch, cfg);
  auto value = [&](const SpnGraph& h) {
    const Schedule hs = make_schedule(h);
    return mm ? mm_objective_value(h, hs, batch, cfg).value : cll_objective_value(h, hs, batch, cfg).value;
  };
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(NodeId{i});
    if (n.kind != NodeKind::Sum) continue;
    for (std::size_t j = 0; j < n.weights.size(); ++j) {
      auto f = [&](double d) {
        SpnGraph h = g;
        h.node(NodeId{i}).weights[j] += d;
        return value(h);
      };
      const double fd = central_difference(f, 1e-6 * std::max(1.0, n.weights[j]));
      const double an = og.gradient.edges[i][j];
      if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
      CHECK(rel_err(an, fd) <= 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("margin of the two-class scores") {
  const std::vector<double> s{std::log(0.12), std::log(0.018)};
  const MarginResult m = margin(s, 0);
  CHECK(m.d == doctest::Approx(0.12 / 0.018).epsilon(1e-12));
  CHECK(m.runner_up == 1);
  const std::vector<double> eq{-1.0, -1.0};
  CHECK(margin(eq, 0).d == 1.0);
  CHECK(margin(eq, 0).log_margin == 0.0);
}

TEST_CASE("margin equals the smallest pairwise ratio") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s{n(rng), n(rng), n(rng)};
    for (std::uint32_t y = 0; y < 3; ++y) {
      double ratio = std::numeric_limits<double>::infinity();
      for (std::uint32_t o = 0; o < 3; ++o) {
        if (o != y) ratio = std::min(ratio, std::exp(s[y]) / std::exp(s[o]));
      }
      CHECK(rel_err(margin(s, y).d, ratio) <= 1e-12);
    }
  }
}

TEST_CASE("soft margin: closed forms and bound") {
  const std::vector<double> two{0.3, -0.4};
  CHECK(soft_margin(two, 0, 5.0) == doctest::Approx(margin(two, 0).log_margin).epsilon(1e-14));
  const std::vector<double> tied{1.0, 0.2, 0.2, 0.2};
  CHECK(soft_margin(tied, 0, 4.0) == doctest::Approx(0.8 - std::log(3.0) / 4.0).epsilon(1e-14));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 3.0);
  for (double eta : {1.0, 2.0, 8.0, 64.0}) {
    for (int t = 0; t < 200; ++t) {
      std::vector<double> s{n(rng), n(rng), n(rng)};
      const double gap = margin(s, 0).log_margin - soft_margin(s, 0, eta);
      CHECK(gap >= -1e-12);
      CHECK(gap <= std::log(2.0) / eta + 1e-12);
    }
  }
  CHECK_THROWS_AS(soft_margin(two, 0, 0.5), std::invalid_argument);
}

TEST_CASE("square hinge values") {
  CHECK(square_hinge(1.0).value == 1.0);
  CHECK(square_hinge(1.0).derivative == 0.0);
  CHECK(square_hinge(0.0).value == 0.0);
  CHECK(square_hinge(0.0).derivative == 2.0);
  CHECK(square_hinge(0.5).value == 0.75);
  CHECK(square_hinge(3.0).value == 1.0);
  CHECK(square_hinge(-1.0).value == -3.0);
}

TEST_CASE("max-margin gradient matches finite differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    SpnGraph g = random_classifier(rng, 3, 2, 3, 40);
    std::vector<Sample> batch;
    for (std::uint32_t y = 0; y < 3; ++y) batch.push_back({random_features(rng, 2, 3), y});
    TrainingConfig cfg;
    cfg.inference = Inference::Soft;
    cfg.beta = 0.01;
    check_objective_gradient(g, batch, cfg, true);
  }
}

TEST_CASE("CLL gradient matches finite differences on a small graph") {
  std::mt19937_64 rng(41);
  SpnGraph g = random_classifier(rng, 2, 1, 2, 12);
  std::vector<Sample> batch{{random_features(rng, 1, 2), 0}, {random_features(rng, 1, 2), 1}};
  TrainingConfig cfg;
  cfg.inference = Inference::Soft;
  check_objective_gradient(g, batch, cfg, false);
}

TEST_CASE("saturated hinge leaves only the regularizer") {
  const SpnGraph g = build_flat(small_arch(2, 1, 2));
  FeatureTensor x(1, 2);
  x.values = {0.4, 0.8};
  const auto scores = class_scores(g, x, Inference::Mixed);
  const std::uint32_t y = argmax_label(scores);
  TrainingConfig cfg;
  cfg.lambda = 10.0 / std::max(1e-9, margin(scores, y).log_margin);
  std::vector<Sample> batch{{x, y}};
  const Schedule s = make_schedule(g);
  auto og = mm_objective(g, s, batch, cfg);
  CHECK(og.gradient.all_zero());

  cfg.beta = 0.25;
  og = mm_objective(g, s, batch, cfg);
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(NodeId{i});
    for (std::size_t j = 0; j < n.weights.size(); ++j) CHECK(og.gradient.edges[i][j] == -2.0 * 0.25 * n.weights[j]);
  }
  for (const auto& t : og.gradient.templates) {
    for (double v : t) CHECK(v == 0.0);
  }
}

TEST_CASE("max-margin training separates Gaussian clusters") {
  ClusterSpec spec;
  spec.classes = 3;
  spec.per_class = 100;
  spec.depth = 8;
  spec.seed = 3;
  const auto data = gaussian_clusters(spec);
  SpnGraph g = build_flat(small_arch(3, 2, 8));
  TrainingConfig cfg;
  cfg.epochs = 30;
  const auto metrics = train(g, data, cfg);
  CHECK(metrics.size() == 31);
  CHECK(metrics.back().train_accuracy >= 0.95);
  CHECK(accuracy(g, data, cfg.inference) == doctest::Approx(metrics.back().train_accuracy));
  CHECK(metrics.back().objective > metrics.front().objective);
}

TEST_CASE("zero learning rate keeps the model") {
  ClusterSpec spec;
  spec.per_class = 20;
  const auto data = gaussian_clusters(spec);
  SpnGraph g = build_flat(small_arch(3, 2, 8));
  const auto before = flat_params(g);
  TrainingConfig cfg;
  cfg.alpha = 0.0;
  cfg.epochs = 2;
  const auto m = train(g, data, cfg);
  CHECK(flat_params(g) == before);
  CHECK(m.back().train_accuracy == m.front().train_accuracy);
}

TEST_CASE("strong regularization with saturated margins shrinks weights every epoch") {
  ClusterSpec spec;
  spec.per_class = 30;
  spec.spread = 0.05;
  const auto data = gaussian_clusters(spec);
  SpnGraph g = build_flat(small_arch(3, 2, 8));
  TrainingConfig pre;
  pre.epochs = 20;
  train(g, data, pre);
  REQUIRE(accuracy(g, data, pre.inference) == 1.0);
  double min_margin = std::numeric_limits<double>::infinity();
  const Schedule s = make_schedule(g);
  for (const auto& d : data) {
    const auto sc = class_scores(g, s, Evidence::with_features(g, d.x), pre.inference);
    min_margin = std::min(min_margin, soft_margin(sc, d.label, pre.eta));
  }
  REQUIRE(min_margin > 0.0);
  TrainingConfig cfg;
  cfg.beta = 1e3;
  cfg.alpha = 1e-6;
  cfg.lambda = 2.0 / min_margin;
  cfg.epochs = 5;
  const auto m = train(g, data, cfg);
  for (std::size_t e = 1; e < m.size(); ++e) CHECK(m[e].weight_norm < m[e - 1].weight_norm);
}

TEST_CASE("CLL training") {
  SUBCASE("one class: nothing to learn") {
    ClusterSpec spec;
    spec.classes = 1;
    spec.per_class = 10;
    const auto data = gaussian_clusters(spec);
    SpnGraph g = build_flat(small_arch(1, 2, 8));
    const auto before = flat_params(g);
    TrainingConfig cfg;
    cfg.epochs = 2;
    cfg.inference = Inference::Soft;
    cll_train(g, data, cfg);
    const auto after = flat_params(g);
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
  }
  SUBCASE("separable clusters") {
    ClusterSpec spec;
    spec.per_class = 60;
    spec.seed = 8;
    const auto data = gaussian_clusters(spec);
    SpnGraph g = build_flat(small_arch(3, 2, 8));
    TrainingConfig cfg;
    const auto m = cll_train(g, data, cfg);
    CHECK(m.back().train_accuracy >= 0.90);
  }
}

TEST_CASE("training is reproducible and the metrics CSV is stable") {
  ClusterSpec spec;
  spec.per_class = 15;
  const auto data = gaussian_clusters(spec);
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 17;
  SpnGraph a = build_flat(small_arch(3, 2, 8));
  SpnGraph b = build_flat(small_arch(3, 2, 8));
  const auto ma = train(a, data, cfg);
  const auto mb = train(b, data, cfg);
  CHECK(flat_params(a) == flat_params(b));
  std::ostringstream ca, cb;
  write_metrics_csv(ca, ma);
  write_metrics_csv(cb, mb);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("epoch,objective,train_accuracy,weight_norm\n", 0) == 0);
}

TEST_CASE("bad configs and labels are rejected") {
  TrainingConfig cfg;
  cfg.eta = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  SpnGraph g = build_flat(small_arch(2, 1, 2));
  std::vector<Sample> bad{{FeatureTensor(1, 2), 5}};
  CHECK_THROWS_AS(train(g, bad, TrainingConfig{}), std::out_of_range);
}
