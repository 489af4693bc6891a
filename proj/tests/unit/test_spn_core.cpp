#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "examples.hpp"
#include "synthetic.hpp"
#include "tspn/spn/evaluate.hpp"
#include "tspn/spn/serialize.hpp"
#include "tspn/spn/validate.hpp"

using namespace tspn;
using namespace tspn::testing;

namespace {

double lin(double log_value) { return std::exp(log_value); }

}  // namespace

TEST_CASE("two-class example: conditional and marginal class values") {
  const SpnGraph g = two_class_example();
  CHECK(validate(g).ok());
  const Evidence e = gp_evidence(g, 1, 1);
  const auto scores = class_scores(g, make_schedule(g), e);
  CHECK(std::abs(lin(scores[0]) - 0.018) <= 1e-12);
  CHECK(std::abs(lin(scores[1]) - 0.12) <= 1e-12);
  CHECK(argmax_label(scores) == 1);
  CHECK(std::abs(lin(evaluate(g, e)) - 0.138) <= 1e-12);

  const auto marg = class_scores(g, make_schedule(g), Evidence::marginal(g));
  CHECK(std::abs(lin(marg[0]) - 0.2) <= 1e-12);
  CHECK(std::abs(lin(marg[1]) - 0.8) <= 1e-12);
  CHECK(std::abs(lin(partition(g)) - 1.0) <= 1e-12);
}

TEST_CASE("three-class example branch values") {
  const SpnGraph g = three_class_example();
  CHECK(validate(g).ok());
  const auto s = class_scores(g, make_schedule(g), gp_evidence(g, 1, 1));
  CHECK(std::abs(lin(s[0]) - 0.04) <= 1e-12);
  CHECK(std::abs(lin(s[1]) - 0.1224) <= 1e-12);
  CHECK(std::abs(lin(s[2]) - 0.1176) <= 1e-12);
}

TEST_CASE("partition of unnormalized root weights") {
  SpnGraph g;
  const NodeId a1 = g.add_indicator(0, 1), a0 = g.add_indicator(0, 0);
  const NodeId b1 = g.add_indicator(1, 1), b0 = g.add_indicator(1, 0);
  const NodeId left = g.add_product({g.add_sum({a1, a0}, {0.5, 0.5}), g.add_sum({b1, b0}, {0.5, 0.5})});
  const NodeId right = g.add_product({g.add_sum({a1, a0}, {0.1, 0.9}), g.add_sum({b1, b0}, {0.7, 0.3})});
  g.set_root(g.add_sum({left, right}, {2.0, 3.0}));
  CHECK(validate(g).ok());
  CHECK(lin(partition(g)) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("validate: degenerate and broken graphs") {
  SUBCASE("single indicator is valid") {
    SpnGraph g;
    g.set_root(g.add_indicator(0, 1));
    CHECK(validate(g).ok());
  }
  SUBCASE("product over overlapping scopes") {
    SpnGraph g;
    const NodeId a = g.add_indicator(1, 1);
    const NodeId b = g.add_indicator(1, 0);
    const NodeId p = g.add_product({a, b});
    g.set_root(p);
    const auto r = validate(g);
    REQUIRE(r.has(ViolationKind::NotDecomposable));
    CHECK(r.violations.front().node == p);
  }
  SUBCASE("sum over different scopes") {
    SpnGraph g;
    const NodeId s = g.add_sum({g.add_indicator(0, 1), g.add_indicator(1, 1)}, {1.0, 1.0});
    g.set_root(s);
    CHECK(validate(g).has(ViolationKind::Incomplete));
  }
  SUBCASE("negative weight") {
    SpnGraph g;
    g.set_root(g.add_sum({g.add_indicator(0, 1), g.add_indicator(0, 0)}, {1.0, -0.5}));
    CHECK(validate(g).has(ViolationKind::NegativeWeight));
  }
  SUBCASE("unreachable node") {
    SpnGraph g;
    g.add_indicator(3, 1);
    g.set_root(g.add_sum({g.add_indicator(0, 1), g.add_indicator(0, 0)}, {1.0, 1.0}));
    CHECK(validate(g).has(ViolationKind::Unreachable));
  }
  SUBCASE("cycle") {
    SpnGraph g;
    Node a;
    a.kind = NodeKind::Product;
    a.children = {NodeId{1}};
    Node b;
    b.kind = NodeKind::Product;
    b.children = {NodeId{0}};
    g.add_node(a);
    g.add_node(b);
    g.set_root(NodeId{0});
    CHECK(validate(g).has(ViolationKind::Cycle));
    CHECK_THROWS_AS(make_schedule(g), StructuralError);
  }
  SUBCASE("child index out of range") {
    SpnGraph g;
    Node a;
    a.kind = NodeKind::Product;
    a.children = {NodeId{7}};
    g.add_node(a);
    g.set_root(NodeId{0});
    CHECK_THROWS_AS(validate(g), StructuralError);
  }
}

TEST_CASE("missing evidence is reported") {
  const SpnGraph g = two_class_example();
  Evidence e;
  e.observe(kG, 1, 2);
  CHECK_THROWS_AS(evaluate(g, e), IncompleteEvidence);
}

TEST_CASE("symmetric classes score equally") {
  SpnGraph g;
  g.set_label(0, 2);
  const NodeId p1 = g.add_indicator(1, 1), p0 = g.add_indicator(1, 0);
  std::vector<NodeId> kids;
  for (std::uint32_t c = 0; c < 2; ++c) {
    kids.push_back(g.add_product({g.add_indicator(0, c), g.add_sum({p1, p0}, {0.3, 0.7})}));
  }
  g.set_root(g.add_sum(kids, {0.5, 0.5}));
  Evidence e = Evidence::marginal(g);
  e.observe(1, 1, 2);
  const auto s = class_scores(g, make_schedule(g), e);
  CHECK(s[0] == s[1]);
}

TEST_CASE("partition matches enumeration on random 8-variable networks") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const SpnGraph g = random_spn(rng, 8, 60);
    REQUIRE(validate(g).ok());
    const double brute = enumerate(g, std::vector<int>(8, -1), nullptr, false);
    CHECK(rel_err(lin(partition(g)), brute) <= 1e-9);
  }
}

TEST_CASE("class scores match enumeration over hidden indicators") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    SpnGraph g = random_classifier(rng, 3, 2, 3, 40);
    REQUIRE(validate(g).ok());
    const FeatureTensor x = random_features(rng, 2, 3);
    const auto s = class_scores(g, x);
    for (std::uint32_t y = 0; y < 3; ++y) {
      std::vector<int> fixed(g.variable_count(), -1);
      fixed[0] = static_cast<int>(y);
      CHECK(rel_err(lin(s[y]), enumerate(g, fixed, &x, false)) <= 1e-9);
    }
  }
}

TEST_CASE("log_sum_exp is stable and ignores -inf") {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> mixed{-inf, 2.0};
  CHECK(log_sum_exp(mixed) == 2.0);
  const std::vector<double> none{-inf, -inf};
  CHECK(log_sum_exp(none) == -inf);
}

TEST_CASE("hard inference picks the heavier weighted branch") {
  const SpnGraph g = two_class_example();
  const Schedule s = make_schedule(g);
  CHECK(lin(evaluate(g, s, gp_evidence(g, 1, 1), Inference::Hard)) == doctest::Approx(0.12).epsilon(1e-12));
}

TEST_CASE("mixed inference: label sums soft, the rest max") {
  const SpnGraph g = three_class_example();
  const Schedule s = make_schedule(g);
  // per-class G/P sums become max nodes once the label is clamped away from them
  const double mixed = lin(evaluate(g, s, Evidence::marginal(g), Inference::Mixed));
  const double expect = 0.2 * 0.5 * 0.6 + 0.408 * 0.5 * 0.6 + 0.392 * 0.5 * 0.6;
  CHECK(mixed == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("serialization round trip keeps weights bit-exact") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const SpnGraph g = random_classifier(rng, 3, 2, 4, 50);
    const SpnGraph h = from_text(to_text(g));
    REQUIRE(h.size() == g.size());
    CHECK(to_text(h) == to_text(g));
    const FeatureTensor x = random_features(rng, 2, 4);
    CHECK(class_scores(g, x) == class_scores(h, x));
  }
}

TEST_CASE("parse errors carry the line number") {
  try {
    from_text("spn 1 0 0 0\nbogus 1 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("inference names") {
  CHECK(parse_inference("mixed") == Inference::Mixed);
  CHECK(std::string(to_string(Inference::Hard)) == "hard");
  CHECK_THROWS_AS(parse_inference("fuzzy"), std::invalid_argument);
}
