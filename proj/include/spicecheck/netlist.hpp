#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spicecheck/util.hpp"

namespace spicecheck {

enum class ElementKind { Mosfet, Resistor, Capacitor, VSource, ISource, SubcktInstance };

const char* to_string(ElementKind k);

// A numeric literal with an optional scale suffix, kept both canonicalized and
// as written so lint rules can reason about the original spelling.
struct PhysicalValue {
  double magnitude = 0.0;
  std::string suffix;  // canonical lower case: "", "f","p","n","u","m","k","meg","g"
  std::string raw;

  double scaled() const;
  static std::optional<PhysicalValue> parse(std::string_view token);

  bool operator==(const PhysicalValue&) const = default;
};

struct Element {
  ElementKind kind = ElementKind::Resistor;
  std::string name;
  std::vector<std::string> nodes;  // MOSFET order: drain, gate, source, bulk
  std::optional<std::string> model;  // MOSFET model, or subcircuit name for X elements
  std::optional<PhysicalValue> value;
  bool dc_keyword = false;  // V/I sources written as "V1 a b DC 1.8"
  std::map<std::string, PhysicalValue> params;  // keys upper-cased
  int line_no = 0;

  bool structurally_equal(const Element& o) const;
};

enum class CardKind { Model, Param, Dc, Tran, Print, Options, End, Ends, Subckt, Unknown };

const char* to_string(CardKind k);

struct ControlCard {
  CardKind kind = CardKind::Unknown;
  std::string directive;  // as written, e.g. ".OPTION", ".tr"
  std::vector<std::string> args;
  int line_no = 0;

  bool structurally_equal(const ControlCard& o) const;
};

struct SubcircuitDef {
  std::string name;
  std::vector<std::string> ports;
  std::vector<Element> elements;
  std::vector<ControlCard> cards;
  bool terminated = false;  // saw .ENDS
  int line_no = 0;

  bool structurally_equal(const SubcircuitDef& o) const;
};

struct SourceLine {
  int line_no = 0;   // physical line number of the first folded line
  std::string text;  // logical line after continuation folding
};

struct ParseIssue {
  int line_no = 0;
  std::string category;
  std::string message;
};

struct Netlist {
  std::string title;
  std::vector<Element> elements;  // top-level elements in file order
  std::vector<ControlCard> cards;  // top-level cards in file order (minus subckt bodies)
  std::map<std::string, SubcircuitDef> subcircuits;
  bool terminated = false;  // saw .END
  std::vector<SourceLine> source_lines;

  const SourceLine* line(int line_no) const;
  // All .MODEL names declared anywhere, lower-cased.
  std::set<std::string> declared_models() const;
  std::set<std::string> node_names() const;
};

struct ParseResult {
  Netlist netlist;
  std::vector<ParseIssue> issues;
};

ParseResult parse_netlist(std::string_view text);
std::string serialize_netlist(const Netlist& n);

// Structural AST equality: ignores line numbers and source_lines.
bool ast_equal(const Netlist& a, const Netlist& b);

struct NodeGraph {
  std::set<std::string> nodes;
  // node -> set of (neighbor, via element name)
  std::map<std::string, std::set<std::pair<std::string, std::string>>> adjacency;
  std::map<std::string, int> degree;  // element terminals touching the node

  std::set<std::string> neighbors(const std::string& node) const;
  int total_degree() const;
  // Rails are excluded from anomaly suspect sets: ground plus any node whose
  // terminal count exceeds half the element count (supply-style fanout).
  bool is_rail(const std::string& node, std::size_t element_count) const;
};

NodeGraph connectivity_graph(const Netlist& n);
NodeGraph connectivity_graph(const std::vector<Element>& elements);

// The node treated as the primary output: a node literally named "out", else
// the first .PRINT V(...) probe.
std::string resolve_output_node(const Netlist& n);
// The swept input node: "in" when present, else the first V source hanging
// off ground that is not a supply. Empty when neither exists.
std::string resolve_input_node(const Netlist& n);

}  // namespace spicecheck
