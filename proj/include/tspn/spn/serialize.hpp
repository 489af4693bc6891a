#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "tspn/spn/graph.hpp"

namespace tspn {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Line-oriented text format:
///
///   spn <node_count> <label_var> <C> <template_count>
///   tpl <k values...>          (template_count lines)
///   sum <child:weight ...>
///   prod <child ...>
///   ind <var> <value>
///   feat <row> <col> <template>
///
/// Node lines appear in NodeId order and the last one is the root. Reals are
/// printed with 17 significant digits so weights round-trip exactly. A graph
/// whose root is not the last node is written with the root moved to the end;
/// every other node keeps its relative order.
void write_graph(std::ostream& os, const SpnGraph& graph);
SpnGraph read_graph(std::istream& is);

std::string to_text(const SpnGraph& graph);
SpnGraph from_text(const std::string& text);

/// Writes through a temporary file and renames it into place.
void save_graph(const std::filesystem::path& path, const SpnGraph& graph);
SpnGraph load_graph(const std::filesystem::path& path);

}  // namespace tspn
