#include "synthetic.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace tspn::testing {

std::vector<Sample> gaussian_clusters(const ClusterSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.spread);
  const std::size_t entries = static_cast<std::size_t>(spec.grid) * spec.grid * spec.depth;

  std::vector<std::vector<double>> means(spec.classes, std::vector<double>(entries));
  for (auto& m : means) for (double& v : m) v = u(rng);
  if (spec.confusable.size() >= 2) {
    const auto& base = means[spec.confusable.front()];
    for (std::size_t i = 1; i < spec.confusable.size(); ++i) {
      auto& m = means[spec.confusable[i]];
      m = base;
      std::vector<std::size_t> idx(entries);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::uint32_t e = 0; e < spec.offset_entries && e < entries; ++e) {
        m[idx[e]] += spec.offset * (u(rng) < 0.5 ? -1.0 : 1.0);
      }
    }
  }

  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(spec.classes) * spec.per_class);
  for (std::uint32_t n = 0; n < spec.per_class; ++n) {
    for (std::uint32_t c = 0; c < spec.classes; ++c) {
      Sample s{FeatureTensor(spec.grid, spec.depth), c};
      for (std::size_t i = 0; i < entries; ++i) s.x.values[i] = std::max(0.0, means[c][i] + noise(rng));
      out.push_back(std::move(s));
    }
  }
  return out;
}

ClusterSpec confusable_spec(std::uint64_t seed) {
  ClusterSpec s;
  s.classes = 3;
  s.per_class = 200;
  s.grid = 2;
  s.depth = 16;
  s.spread = 0.3;
  s.confusable = {1, 2};
  s.offset = 0.3;
  s.offset_entries = 4;
  s.seed = seed;
  return s;
}

void split(const std::vector<Sample>& all, double test_fraction, std::uint64_t seed,
           std::vector<Sample>& train, std::vector<Sample>& test) {
  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < all.size(); ++i) by_class[all[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<bool> held(all.size(), false);
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(test_fraction * static_cast<double>(idx.size()) + 0.5);
    for (std::size_t i = 0; i < k; ++i) held[idx[i]] = true;
  }
  train.clear();
  test.clear();
  for (std::size_t i = 0; i < all.size(); ++i) (held[i] ? test : train).push_back(all[i]);
}

namespace {

struct Builder {
  std::mt19937_64& rng;
  SpnGraph g;
  std::map<std::pair<std::uint32_t, std::uint32_t>, NodeId> indicators;
  std::map<std::vector<std::uint32_t>, std::vector<NodeId>> by_scope;

  NodeId indicator(std::uint32_t var, std::uint32_t value) {
    auto key = std::make_pair(var, value);
    auto it = indicators.find(key);
    if (it != indicators.end()) return it->second;
    NodeId id = g.add_indicator(var, value);
    indicators.emplace(key, id);
    return id;
  }

  double weight() { return std::uniform_real_distribution<double>(0.05, 1.0)(rng); }

  NodeId make(const std::vector<std::uint32_t>& scope, int depth) {
    auto& seen = by_scope[scope];
    if (!seen.empty() && std::uniform_real_distribution<double>(0, 1)(rng) < 0.3) {
      return seen[std::uniform_int_distribution<std::size_t>(0, seen.size() - 1)(rng)];
    }
    NodeId id;
    if (scope.size() == 1) {
      const std::uint32_t v = scope.front();
      if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.2) {
        id = indicator(v, std::uniform_int_distribution<std::uint32_t>(0, 1)(rng));
      } else {
        id = g.add_sum({indicator(v, 1), indicator(v, 0)}, {weight(), weight()});
      }
    } else if (depth <= 0 || std::uniform_real_distribution<double>(0, 1)(rng) < 0.55) {
      // Product over a random partition into 2 or 3 blocks.
      std::vector<std::uint32_t> shuffled = scope;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const std::size_t blocks = std::min<std::size_t>(
          scope.size(), std::uniform_int_distribution<std::size_t>(2, 3)(rng));
      std::vector<std::vector<std::uint32_t>> parts(blocks);
      for (std::size_t i = 0; i < shuffled.size(); ++i) {
        parts[i < blocks ? i : std::uniform_int_distribution<std::size_t>(0, blocks - 1)(rng)].push_back(shuffled[i]);
      }
      std::vector<NodeId> kids;
      for (auto& p : parts) {
        std::sort(p.begin(), p.end());
        kids.push_back(make(p, depth - 1));
      }
      id = g.add_product(std::move(kids));
    } else {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 3)(rng);
      std::vector<NodeId> kids;
      std::vector<double> w;
      for (std::size_t i = 0; i < n; ++i) {
        kids.push_back(make(scope, depth - 1));
        w.push_back(weight());
      }
      id = g.add_sum(std::move(kids), std::move(w));
    }
    by_scope[scope].push_back(id);
    return id;
  }
};

}  // namespace

SpnGraph random_spn(std::mt19937_64& rng, std::uint32_t variables, std::uint32_t max_nodes) {
  for (;;) {
    Builder b{rng, {}, {}, {}};
    std::vector<std::uint32_t> scope(variables);
    std::iota(scope.begin(), scope.end(), 0u);
    const int depth = std::uniform_int_distribution<int>(2, 4)(rng);
    NodeId top = b.make(scope, depth);
    if (b.g.node(top).kind != NodeKind::Sum) {
      top = b.g.add_sum({top, b.make(scope, depth - 1)}, {b.weight(), b.weight()});
    }
    b.g.set_root(top);
    // Unreachable leftovers can't appear: every node is created on demand.
    if (b.g.size() <= max_nodes) return std::move(b.g);
  }
}

FeatureTensor random_features(std::mt19937_64& rng, std::uint32_t grid, std::uint32_t depth) {
  FeatureTensor x(grid, depth);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : x.values) v = u(rng);
  return x;
}

SpnGraph random_classifier(std::mt19937_64& rng, std::uint32_t classes, std::uint32_t grid,
                           std::uint32_t depth, std::uint32_t max_weights) {
  std::uniform_real_distribution<double> wu(0.2, 1.2);
  std::normal_distribution<double> tn(0.0, 0.7);
  std::uniform_int_distribution<std::uint32_t> cell(0, grid - 1);
  for (;;) {
    SpnGraph g;
    g.set_label(0, classes);
    const std::uint32_t templates = std::uniform_int_distribution<std::uint32_t>(1, 4)(rng);
    for (std::uint32_t t = 0; t < templates; ++t) {
      std::vector<double> v(depth);
      for (double& x : v) x = tn(rng);
      g.add_template(std::move(v));
    }
    auto leaf = [&]() {
      return g.add_feature(cell(rng), cell(rng),
                           std::uniform_int_distribution<std::uint32_t>(0, templates - 1)(rng));
    };
    std::vector<NodeId> shared;
    for (int i = 0; i < 3; ++i) shared.push_back(leaf());
    auto component = [&]() {
      const std::uint32_t n = std::uniform_int_distribution<std::uint32_t>(2, 3)(rng);
      std::vector<NodeId> kids;
      std::vector<double> w;
      for (std::uint32_t i = 0; i < n; ++i) {
        const bool reuse = std::uniform_real_distribution<double>(0, 1)(rng) < 0.3;
        kids.push_back(reuse ? shared[std::uniform_int_distribution<std::size_t>(0, 2)(rng)] : leaf());
        w.push_back(wu(rng));
      }
      return g.add_sum(std::move(kids), std::move(w));
    };
    std::vector<NodeId> root_kids;
    std::vector<double> root_w;
    for (std::uint32_t c = 0; c < classes; ++c) {
      const NodeId ind = g.add_indicator(0, c);
      const std::uint32_t mixtures = std::uniform_int_distribution<std::uint32_t>(1, 2)(rng);
      for (std::uint32_t m = 0; m < mixtures; ++m) {
        std::vector<NodeId> factors{ind};
        const std::uint32_t parts = std::uniform_int_distribution<std::uint32_t>(1, 2)(rng);
        for (std::uint32_t p = 0; p < parts; ++p) {
          if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.5) {
            factors.push_back(component());
          } else {
            NodeId a = component();
            NodeId b = component();
            factors.push_back(g.add_sum({g.add_product({a, leaf()}), b}, {wu(rng), wu(rng)}));
          }
        }
        root_kids.push_back(g.add_product(std::move(factors)));
        root_w.push_back(wu(rng));
      }
    }
    g.set_root(g.add_sum(std::move(root_kids), std::move(root_w)));
    if (g.sum_edge_count() <= max_weights) return g;
  }
}

}  // namespace tspn::testing
