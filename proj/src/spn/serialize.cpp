#include "tspn/spn/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "tspn/util/atomic_file.hpp"

namespace tspn {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ParseError(line, "bad number '" + tok + "'");
  return v;
}

std::uint32_t parse_index(const std::string& tok, std::size_t line) {
  std::uint32_t v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw ParseError(line, "bad index '" + tok + "'");
  return v;
}

}  // namespace

void write_graph(std::ostream& os, const SpnGraph& graph) {
  graph.check_structure();
  const auto n = static_cast<std::uint32_t>(graph.size());
  const std::uint32_t root = graph.root().index;
  // Old index -> written index, moving the root to the end.
  auto remap = [&](std::uint32_t i) -> std::uint32_t {
    if (i == root) return n - 1;
    return i > root ? i - 1 : i;
  };
  std::vector<std::uint32_t> written_order;
  written_order.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (i != root) written_order.push_back(i);
  }
  written_order.push_back(root);

  os << "spn " << n << ' ' << graph.label_variable() << ' ' << graph.label_count() << ' '
     << graph.template_count() << '\n';
  for (std::uint32_t t = 0; t < graph.template_count(); ++t) {
    os << "tpl";
    for (double w : graph.template_at(t)) os << ' ' << format_real(w);
    os << '\n';
  }
  for (std::uint32_t i : written_order) {
    const Node& node = graph.nodes()[i];
    switch (node.kind) {
      case NodeKind::Sum:
        os << "sum";
        for (std::size_t j = 0; j < node.children.size(); ++j) {
          os << ' ' << remap(node.children[j].index) << ':' << format_real(node.weights[j]);
        }
        break;
      case NodeKind::Product:
        os << "prod";
        for (NodeId c : node.children) os << ' ' << remap(c.index);
        break;
      case NodeKind::Indicator:
        os << "ind " << node.variable << ' ' << node.value;
        break;
      case NodeKind::Feature:
        os << "feat " << node.row << ' ' << node.col << ' ' << node.templ;
        break;
    }
    os << '\n';
  }
}

SpnGraph read_graph(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(line_no, "empty input");
  std::istringstream header(line);
  std::string magic;
  std::string count_tok;
  std::string label_tok;
  std::string classes_tok;
  std::string templates_tok;
  if (!(header >> magic >> count_tok >> label_tok >> classes_tok >> templates_tok) || magic != "spn") {
    throw ParseError(line_no, "expected 'spn <node_count> <label_var> <C> <template_count>'");
  }
  const std::uint32_t count = parse_index(count_tok, line_no);
  const std::uint32_t templates = parse_index(templates_tok, line_no);
  SpnGraph graph;
  graph.set_label(parse_index(label_tok, line_no), parse_index(classes_tok, line_no));

  for (std::uint32_t t = 0; t < templates; ++t) {
    if (!next_line()) throw ParseError(line_no, "expected " + std::to_string(templates) + " template lines");
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind != "tpl") throw ParseError(line_no, "expected 'tpl <values...>'");
    std::vector<double> values;
    for (std::string tok; ls >> tok;) values.push_back(parse_real(tok, line_no));
    graph.add_template(std::move(values));
  }

  for (std::uint32_t i = 0; i < count; ++i) {
    if (!next_line()) throw ParseError(line_no, "expected " + std::to_string(count) + " node lines");
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    Node node;
    if (kind == "sum") {
      node.kind = NodeKind::Sum;
      for (const auto& t : toks) {
        const auto colon = t.find(':');
        if (colon == std::string::npos) throw ParseError(line_no, "expected child:weight, got '" + t + "'");
        node.children.push_back(NodeId{parse_index(t.substr(0, colon), line_no)});
        node.weights.push_back(parse_real(t.substr(colon + 1), line_no));
      }
    } else if (kind == "prod") {
      node.kind = NodeKind::Product;
      for (const auto& t : toks) node.children.push_back(NodeId{parse_index(t, line_no)});
    } else if (kind == "ind") {
      if (toks.size() != 2) throw ParseError(line_no, "expected 'ind <var> <value>'");
      node.kind = NodeKind::Indicator;
      node.variable = parse_index(toks[0], line_no);
      node.value = parse_index(toks[1], line_no);
    } else if (kind == "feat") {
      if (toks.size() != 3) throw ParseError(line_no, "expected 'feat <row> <col> <template>'");
      node.kind = NodeKind::Feature;
      node.row = parse_index(toks[0], line_no);
      node.col = parse_index(toks[1], line_no);
      node.templ = parse_index(toks[2], line_no);
    } else {
      throw ParseError(line_no, "unknown node kind '" + kind + "'");
    }
    graph.add_node(std::move(node));
  }
  if (count == 0) throw ParseError(line_no, "graph has no nodes");
  graph.set_root(NodeId{count - 1});
  graph.check_structure();
  return graph;
}

std::string to_text(const SpnGraph& graph) {
  std::ostringstream os;
  write_graph(os, graph);
  return os.str();
}

SpnGraph from_text(const std::string& text) {
  std::istringstream is(text);
  return read_graph(is);
}

void save_graph(const std::filesystem::path& path, const SpnGraph& graph) {
  write_file_atomic(path, to_text(graph));
}

SpnGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  return read_graph(in);
}

}  // namespace tspn
