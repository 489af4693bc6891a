#include "tspn/structure/architecture.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "tspn/spn/labels.hpp"

namespace tspn {

namespace {

struct ClassTree {
  NodeId top;
  double root_weight = 0.0;
};

std::mt19937_64 class_stream(std::uint64_t seed, std::uint32_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), c,
                    0x7370u};
  return std::mt19937_64(seq);
}

std::vector<double> fan_in_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> w(n);
  for (double& v : w) v = u(rng) / static_cast<double>(n);
  return w;
}

ClassTree add_class(SpnGraph& g, const ArchitectureSpec& spec, std::uint32_t c) {
  auto rng = class_stream(spec.seed, c);
  std::uniform_real_distribution<double> root_u(0.5, 1.5);
  std::uniform_real_distribution<double> templ_u(-spec.template_scale, spec.template_scale);
  ClassTree tree;
  tree.root_weight = root_u(rng) / static_cast<double>(spec.classes);

  std::vector<NodeId> factors{g.add_indicator(0, c)};
  for (std::uint32_t p = 0; p < spec.parts; ++p) {
    std::vector<NodeId> comps;
    for (std::uint32_t t = 0; t < spec.components; ++t) {
      std::vector<double> values(spec.depth);
      for (double& v : values) v = templ_u(rng);
      const std::uint32_t templ = g.add_template(std::move(values));
      std::vector<NodeId> leaves;
      leaves.reserve(static_cast<std::size_t>(spec.grid) * spec.grid);
      for (std::uint32_t r = 0; r < spec.grid; ++r) {
        for (std::uint32_t q = 0; q < spec.grid; ++q) leaves.push_back(g.add_feature(r, q, templ));
      }
      auto w = fan_in_weights(rng, leaves.size());
      comps.push_back(g.add_sum(std::move(leaves), std::move(w)));
    }
    auto w = fan_in_weights(rng, comps.size());
    factors.push_back(g.add_sum(std::move(comps), std::move(w)));
  }
  tree.top = g.add_product(std::move(factors));
  return tree;
}

std::vector<ClassTree> add_classes(SpnGraph& g, const ArchitectureSpec& spec) {
  spec.validate();
  g.set_label(0, spec.classes);
  std::vector<ClassTree> trees;
  for (std::uint32_t c = 0; c < spec.classes; ++c) trees.push_back(add_class(g, spec, c));
  return trees;
}

}  // namespace

void ArchitectureSpec::validate() const {
  if (classes == 0 || parts == 0 || components == 0 || grid == 0 || depth == 0) {
    throw std::invalid_argument("architecture counts C, P, T, G, K must all be positive");
  }
  if (!(template_scale >= 0.0)) throw std::invalid_argument("template scale must be >= 0");
}

std::size_t ArchitectureSpec::node_count() const {
  const std::size_t g2 = static_cast<std::size_t>(grid) * grid;
  return 1 + classes * (2 + parts * (1 + components * (1 + g2)));
}

SpnGraph build_flat(const ArchitectureSpec& spec) {
  SpnGraph g;
  const auto trees = add_classes(g, spec);
  std::vector<NodeId> kids;
  std::vector<double> w;
  for (const auto& t : trees) {
    kids.push_back(t.top);
    w.push_back(t.root_weight);
  }
  g.set_root(g.add_sum(std::move(kids), std::move(w)));
  return g;
}

SpnGraph merge_branches(const SpnGraph& flat, const ConfusionSubset& subset, std::string* warning) {
  std::vector<std::uint32_t> members = subset.classes;
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.size() < 2) throw std::invalid_argument("a confusion subset needs at least two classes");
  const std::uint32_t classes = flat.label_count();
  if (members.back() >= classes) throw std::out_of_range("confusion subset class out of range");
  if (members.size() == classes) {
    if (warning != nullptr) *warning = "subset covers every class; building the flat model";
    return flat;
  }
  const NodeId root = flat.root();
  if (flat.empty() || root.index + 1 != flat.size() || flat.node(root).kind != NodeKind::Sum) {
    throw std::invalid_argument("merge needs a graph whose last node is the root sum");
  }
  const LabelBranches branches = label_branches(flat);
  const Node& top = flat.node(root);
  if (branches.groups.size() != classes || top.children.size() != classes) {
    throw std::invalid_argument("merge needs one root branch per class");
  }
  // position of each label's branch among the root's children
  std::vector<std::size_t> branch_of(classes);
  for (std::size_t b = 0; b < branches.groups.size(); ++b) branch_of[branches.groups[b].front()] = b;

  SpnGraph g;
  for (std::uint32_t t = 0; t < flat.template_count(); ++t) {
    const auto v = flat.template_at(t);
    g.add_template(std::vector<double>(v.begin(), v.end()));
  }
  for (std::uint32_t i = 0; i < root.index; ++i) g.add_node(flat.node(NodeId{i}));
  g.set_label(flat.label_variable(), classes);

  std::vector<NodeId> sub_kids;
  std::vector<double> sub_w;
  double merged = 0.0;
  for (std::uint32_t c : members) {
    sub_kids.push_back(top.children[branch_of[c]]);
    sub_w.push_back(top.weights[branch_of[c]]);
    merged += top.weights[branch_of[c]];
  }
  if (!(merged > 0.0)) throw std::invalid_argument("merged classes have zero root weight");
  for (double& v : sub_w) v /= merged;
  const NodeId sub = g.add_sum(std::move(sub_kids), std::move(sub_w));

  // Branches keep their order; the merged one sits where its lowest class was.
  const std::size_t first = branch_of[members.front()];
  std::vector<NodeId> kids;
  std::vector<double> w;
  for (std::size_t b = 0; b < top.children.size(); ++b) {
    const std::uint32_t label = branches.groups[b].front();
    if (b == first) {
      kids.push_back(sub);
      w.push_back(merged);
    } else if (!std::binary_search(members.begin(), members.end(), label)) {
      kids.push_back(top.children[b]);
      w.push_back(top.weights[b]);
    }
  }
  g.set_root(g.add_sum(std::move(kids), std::move(w)));
  return g;
}

SpnGraph build_tspn(const ArchitectureSpec& spec, const ConfusionSubset& subset, std::string* warning) {
  spec.validate();
  return merge_branches(build_flat(spec), subset, warning);
}

}  // namespace tspn
