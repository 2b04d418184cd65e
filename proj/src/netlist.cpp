#include "spicecheck/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace spicecheck {

using detail::iequals;
using detail::is_number;
using detail::split_ws;
using detail::to_lower;
using detail::to_upper;
using detail::trim;

const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Mosfet: return "mosfet";
    case ElementKind::Resistor: return "resistor";
    case ElementKind::Capacitor: return "capacitor";
    case ElementKind::VSource: return "vsource";
    case ElementKind::ISource: return "isource";
    case ElementKind::SubcktInstance: return "subckt-instance";
  }
  return "?";
}

const char* to_string(CardKind k) {
  switch (k) {
    case CardKind::Model: return "model";
    case CardKind::Param: return "param";
    case CardKind::Dc: return "dc";
    case CardKind::Tran: return "tran";
    case CardKind::Print: return "print";
    case CardKind::Options: return "options";
    case CardKind::End: return "end";
    case CardKind::Ends: return "ends";
    case CardKind::Subckt: return "subckt";
    case CardKind::Unknown: return "unknown";
  }
  return "?";
}

double PhysicalValue::scaled() const {
  double m = 1.0;
  if (suffix == "f") m = 1e-15;
  else if (suffix == "p") m = 1e-12;
  else if (suffix == "n") m = 1e-9;
  else if (suffix == "u") m = 1e-6;
  else if (suffix == "m") m = 1e-3;
  else if (suffix == "k") m = 1e3;
  else if (suffix == "meg") m = 1e6;
  else if (suffix == "g") m = 1e9;
  return magnitude * m;
}

std::optional<PhysicalValue> PhysicalValue::parse(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::size_t i = 0;
  if (token[i] == '+' || token[i] == '-') ++i;
  std::size_t num_begin = i;
  bool digits = false, dot = false;
  while (i < token.size()) {
    char c = token[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = true;
      ++i;
    } else if (c == '.' && !dot) {
      dot = true;
      ++i;
    } else {
      break;
    }
  }
  if (!digits) return std::nullopt;
  // optional exponent
  if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < token.size() && (token[j] == '+' || token[j] == '-')) ++j;
    std::size_t exp_digits = j;
    while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
    if (j > exp_digits) i = j;
  }
  (void)num_begin;
  std::string tail = to_lower(token.substr(i));
  for (char c : tail) {
    if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
  }
  PhysicalValue v;
  v.raw = std::string(token);
  v.magnitude = std::stod(std::string(token.substr(0, i)));
  if (tail.rfind("meg", 0) == 0) {
    v.suffix = "meg";
  } else if (!tail.empty()) {
    switch (tail[0]) {
      case 'f': case 'p': case 'n': case 'u': case 'm': case 'k': case 'g':
        v.suffix = std::string(1, tail[0]);
        break;
      default:
        break;  // bare unit like "V" or "A"
    }
  }
  return v;
}

bool Element::structurally_equal(const Element& o) const {
  return kind == o.kind && name == o.name && nodes == o.nodes && model == o.model &&
         value == o.value && dc_keyword == o.dc_keyword && params == o.params;
}

bool ControlCard::structurally_equal(const ControlCard& o) const {
  return kind == o.kind && directive == o.directive && args == o.args;
}

bool SubcircuitDef::structurally_equal(const SubcircuitDef& o) const {
  if (name != o.name || ports != o.ports || terminated != o.terminated) return false;
  if (elements.size() != o.elements.size() || cards.size() != o.cards.size()) return false;
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (!elements[i].structurally_equal(o.elements[i])) return false;
  for (std::size_t i = 0; i < cards.size(); ++i)
    if (!cards[i].structurally_equal(o.cards[i])) return false;
  return true;
}

const SourceLine* Netlist::line(int line_no) const {
  for (const auto& sl : source_lines)
    if (sl.line_no == line_no) return &sl;
  return nullptr;
}

std::set<std::string> Netlist::declared_models() const {
  std::set<std::string> out;
  auto scan = [&out](const std::vector<ControlCard>& cards) {
    for (const auto& c : cards)
      if (c.kind == CardKind::Model && !c.args.empty()) out.insert(to_lower(c.args[0]));
  };
  scan(cards);
  for (const auto& [name, def] : subcircuits) scan(def.cards);
  return out;
}

std::set<std::string> Netlist::node_names() const {
  std::set<std::string> out;
  for (const auto& e : elements)
    for (const auto& n : e.nodes) out.insert(n);
  return out;
}

namespace {

struct Parser {
  ParseResult result;
  std::set<std::string> model_names;  // lower-cased, collected in a pre-pass

  bool looks_like_model(const std::string& tok) const {
    if (tok.empty() || is_number(tok)) return false;
    if (model_names.count(to_lower(tok))) return true;
    std::string l = to_lower(tok);
    return l.rfind("nmos", 0) == 0 || l.rfind("pmos", 0) == 0;
  }

  void issue(int line_no, std::string category, std::string message) {
    result.issues.push_back({line_no, std::move(category), std::move(message)});
  }

  Element parse_element(const std::vector<std::string>& tokens, int line_no) {
    Element e;
    e.name = tokens[0];
    e.line_no = line_no;
    char k = static_cast<char>(std::toupper(static_cast<unsigned char>(tokens[0][0])));
    switch (k) {
      case 'M': e.kind = ElementKind::Mosfet; break;
      case 'R': e.kind = ElementKind::Resistor; break;
      case 'C': e.kind = ElementKind::Capacitor; break;
      case 'V': e.kind = ElementKind::VSource; break;
      case 'I': e.kind = ElementKind::ISource; break;
      case 'X': e.kind = ElementKind::SubcktInstance; break;
      default: break;
    }

    std::vector<std::string> pos;
    std::size_t i = 1;
    for (; i < tokens.size(); ++i) {
      auto eq = tokens[i].find('=');
      if (eq != std::string::npos && eq > 0) break;
      pos.push_back(tokens[i]);
    }
    for (; i < tokens.size(); ++i) {
      auto eq = tokens[i].find('=');
      if (eq == std::string::npos || eq == 0) {
        issue(line_no, "unexpected-token", "token '" + tokens[i] + "' after parameters");
        continue;
      }
      std::string key = to_upper(tokens[i].substr(0, eq));
      std::string val = tokens[i].substr(eq + 1);
      auto pv = PhysicalValue::parse(val);
      if (!pv) {
        issue(line_no, "bad-param-value", "parameter '" + tokens[i] + "' has no numeric value");
        PhysicalValue empty;
        empty.raw = val;
        e.params[key] = empty;
      } else {
        e.params[key] = *pv;
      }
    }

    switch (e.kind) {
      case ElementKind::Mosfet: {
        bool model_like = !pos.empty() && looks_like_model(pos.back());
        if (model_like && pos.size() >= 2) {
          e.nodes.assign(pos.begin(), pos.end() - 1);
          e.model = pos.back();
        } else {
          e.nodes = pos;
        }
        break;
      }
      case ElementKind::Resistor:
      case ElementKind::Capacitor: {
        for (std::size_t j = 0; j < pos.size() && j < 2; ++j) e.nodes.push_back(pos[j]);
        if (pos.size() >= 3) {
          auto pv = PhysicalValue::parse(pos[2]);
          if (pv) e.value = *pv;
          else issue(line_no, "bad-value", "value token '" + pos[2] + "' is not numeric");
          for (std::size_t j = 3; j < pos.size(); ++j)
            issue(line_no, "unexpected-token", "extra token '" + pos[j] + "'");
        }
        break;
      }
      case ElementKind::VSource:
      case ElementKind::ISource: {
        std::size_t j = 0;
        for (; j < pos.size() && j < 2; ++j) e.nodes.push_back(pos[j]);
        if (j < pos.size() && iequals(pos[j], "DC")) {
          e.dc_keyword = true;
          ++j;
        }
        if (j < pos.size()) {
          auto pv = PhysicalValue::parse(pos[j]);
          if (pv) e.value = *pv;
          else issue(line_no, "bad-value", "value token '" + pos[j] + "' is not numeric");
          ++j;
        }
        for (; j < pos.size(); ++j)
          issue(line_no, "unexpected-token", "extra token '" + pos[j] + "'");
        break;
      }
      case ElementKind::SubcktInstance: {
        if (pos.size() >= 2) {
          e.nodes.assign(pos.begin(), pos.end() - 1);
          e.model = pos.back();
        } else {
          e.nodes = pos;
          issue(line_no, "subckt-instance-incomplete",
                "instance '" + e.name + "' needs nodes and a subcircuit name");
        }
        break;
      }
    }
    return e;
  }

  static CardKind classify_directive(const std::string& d) {
    std::string l = to_lower(d);
    if (l == ".model") return CardKind::Model;
    if (l == ".param") return CardKind::Param;
    if (l == ".dc") return CardKind::Dc;
    if (l == ".tran") return CardKind::Tran;
    if (l == ".print") return CardKind::Print;
    if (l == ".options") return CardKind::Options;
    if (l == ".end") return CardKind::End;
    if (l == ".ends") return CardKind::Ends;
    if (l == ".subckt") return CardKind::Subckt;
    return CardKind::Unknown;
  }

  void run(std::string_view text) {
    Netlist& n = result.netlist;

    // Fold physical lines into logical ones; '+' continues the previous line.
    std::vector<SourceLine> logical;
    int phys_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      std::string_view raw =
          nl == std::string_view::npos ? text.substr(start) : text.substr(start, nl - start);
      if (nl == std::string_view::npos && raw.empty() && start == text.size()) break;
      ++phys_no;
      std::string line(raw);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string t = trim(line);
      if (!t.empty() && t[0] == '+' && !logical.empty()) {
        logical.back().text += " " + trim(t.substr(1));
      } else {
        logical.push_back({phys_no, line});
      }
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
    n.source_lines = logical;
    if (logical.empty()) return;
    n.title = logical[0].text;

    // Pre-pass: .MODEL names inform MOSFET model-token disambiguation.
    for (std::size_t li = 1; li < logical.size(); ++li) {
      auto toks = split_ws(logical[li].text);
      if (toks.size() >= 2 && iequals(toks[0], ".MODEL")) model_names.insert(to_lower(toks[1]));
    }

    std::vector<SubcircuitDef*> scope;
    auto push_element = [&](Element e) {
      if (scope.empty()) n.elements.push_back(std::move(e));
      else scope.back()->elements.push_back(std::move(e));
    };
    auto push_card = [&](ControlCard c) {
      if (scope.empty()) n.cards.push_back(std::move(c));
      else scope.back()->cards.push_back(std::move(c));
    };

    for (std::size_t li = 1; li < logical.size(); ++li) {
      const SourceLine& sl = logical[li];
      std::string t = trim(sl.text);
      if (t.empty() || t[0] == '*') continue;  // blank / comment: inert
      auto tokens = split_ws(t);
      if (n.terminated) issue(sl.line_no, "content-after-end", "line appears after .END");

      char first = t[0];
      if (first == '.') {
        ControlCard card;
        card.directive = tokens[0];
        card.args.assign(tokens.begin() + 1, tokens.end());
        card.line_no = sl.line_no;
        card.kind = classify_directive(tokens[0]);
        switch (card.kind) {
          case CardKind::Subckt: {
            SubcircuitDef def;
            def.line_no = sl.line_no;
            if (!card.args.empty()) {
              def.name = card.args[0];
              def.ports.assign(card.args.begin() + 1, card.args.end());
            } else {
              issue(sl.line_no, "subckt-missing-name", ".SUBCKT has no name");
            }
            std::string key = def.name;
            if (n.subcircuits.count(key)) {
              issue(sl.line_no, "duplicate-subckt", "subcircuit '" + key + "' redefined");
            }
            n.subcircuits[key] = std::move(def);
            scope.push_back(&n.subcircuits[key]);
            break;
          }
          case CardKind::Ends: {
            if (scope.empty()) {
              issue(sl.line_no, "stray-ends", ".ENDS without matching .SUBCKT");
              push_card(std::move(card));
            } else {
              scope.back()->terminated = true;
              scope.pop_back();
            }
            break;
          }
          case CardKind::End: {
            n.terminated = true;
            break;
          }
          default:
            push_card(std::move(card));
            break;
        }
        continue;
      }

      char up = static_cast<char>(std::toupper(static_cast<unsigned char>(first)));
      if (up == 'M' || up == 'R' || up == 'C' || up == 'V' || up == 'I' || up == 'X') {
        push_element(parse_element(tokens, sl.line_no));
      } else {
        ControlCard card;
        card.kind = CardKind::Unknown;
        card.directive = tokens[0];
        card.args.assign(tokens.begin() + 1, tokens.end());
        card.line_no = sl.line_no;
        push_card(std::move(card));
        issue(sl.line_no, "unrecognized-line", "line fits no production: '" + t + "'");
      }
    }
  }
};

void emit_element(std::ostringstream& out, const Element& e) {
  out << e.name;
  for (const auto& node : e.nodes) out << ' ' << node;
  if (e.model) out << ' ' << *e.model;
  if (e.dc_keyword) out << " DC";
  if (e.value) out << ' ' << e.value->raw;
  for (const auto& [k, v] : e.params) out << ' ' << k << '=' << v.raw;
  out << '\n';
}

void emit_card(std::ostringstream& out, const ControlCard& c) {
  out << c.directive;
  for (const auto& a : c.args) out << ' ' << a;
  out << '\n';
}

}  // namespace

ParseResult parse_netlist(std::string_view text) {
  Parser p;
  p.run(text);
  return std::move(p.result);
}

std::string serialize_netlist(const Netlist& n) {
  std::ostringstream out;
  out << n.title << '\n';
  for (const auto& e : n.elements) emit_element(out, e);
  for (const auto& c : n.cards) emit_card(out, c);
  // Terminated subcircuit blocks first; an unterminated one must come last so
  // the text reparses with the same (still-open) scope.
  for (const auto& [name, def] : n.subcircuits) {
    if (!def.terminated) continue;
    out << ".SUBCKT " << def.name;
    for (const auto& port : def.ports) out << ' ' << port;
    out << '\n';
    for (const auto& e : def.elements) emit_element(out, e);
    for (const auto& c : def.cards) emit_card(out, c);
    out << ".ENDS " << def.name << '\n';
  }
  for (const auto& [name, def] : n.subcircuits) {
    if (def.terminated) continue;
    out << ".SUBCKT " << def.name;
    for (const auto& port : def.ports) out << ' ' << port;
    out << '\n';
    for (const auto& e : def.elements) emit_element(out, e);
    for (const auto& c : def.cards) emit_card(out, c);
  }
  if (n.terminated) out << ".END\n";
  return out.str();
}

bool ast_equal(const Netlist& a, const Netlist& b) {
  if (a.title != b.title || a.terminated != b.terminated) return false;
  if (a.elements.size() != b.elements.size() || a.cards.size() != b.cards.size()) return false;
  for (std::size_t i = 0; i < a.elements.size(); ++i)
    if (!a.elements[i].structurally_equal(b.elements[i])) return false;
  for (std::size_t i = 0; i < a.cards.size(); ++i)
    if (!a.cards[i].structurally_equal(b.cards[i])) return false;
  if (a.subcircuits.size() != b.subcircuits.size()) return false;
  auto ia = a.subcircuits.begin();
  auto ib = b.subcircuits.begin();
  for (; ia != a.subcircuits.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !ia->second.structurally_equal(ib->second)) return false;
  }
  return true;
}

std::set<std::string> NodeGraph::neighbors(const std::string& node) const {
  std::set<std::string> out;
  auto it = adjacency.find(node);
  if (it == adjacency.end()) return out;
  for (const auto& [nb, via] : it->second) out.insert(nb);
  return out;
}

int NodeGraph::total_degree() const {
  int total = 0;
  for (const auto& [node, d] : degree) total += d;
  return total;
}

bool NodeGraph::is_rail(const std::string& node, std::size_t element_count) const {
  if (node == "0") return true;
  auto it = degree.find(node);
  if (it == degree.end()) return false;
  return static_cast<std::size_t>(it->second) * 2 > element_count;
}

NodeGraph connectivity_graph(const std::vector<Element>& elements) {
  NodeGraph g;
  for (const auto& e : elements) {
    for (const auto& node : e.nodes) {
      g.nodes.insert(node);
      ++g.degree[node];
    }
    for (std::size_t i = 0; i < e.nodes.size(); ++i) {
      for (std::size_t j = i + 1; j < e.nodes.size(); ++j) {
        if (e.nodes[i] == e.nodes[j]) continue;
        g.adjacency[e.nodes[i]].insert({e.nodes[j], e.name});
        g.adjacency[e.nodes[j]].insert({e.nodes[i], e.name});
      }
    }
  }
  return g;
}

NodeGraph connectivity_graph(const Netlist& n) { return connectivity_graph(n.elements); }

std::string resolve_output_node(const Netlist& n) {
  for (const auto& node : n.node_names())
    if (iequals(node, "out")) return node;
  for (const auto& c : n.cards) {
    if (c.kind != CardKind::Print) continue;
    for (const auto& a : c.args) {
      if (a.size() >= 4 && (a[0] == 'V' || a[0] == 'v') && a[1] == '(' && a.back() == ')')
        return a.substr(2, a.size() - 3);
    }
  }
  throw Error("no-output-node", "netlist names no output: no 'out' node and no .PRINT V(...)");
}

std::string resolve_input_node(const Netlist& n) {
  for (const auto& node : n.node_names())
    if (iequals(node, "in")) return node;
  for (const auto& e : n.elements) {
    if (e.kind != ElementKind::VSource || e.nodes.size() != 2) continue;
    std::string other = e.nodes[0] == "0" ? e.nodes[1] : e.nodes[0];
    std::string l = to_lower(other);
    if (other == "0" || l == "vdd" || l == "vcc" || l == "vdd!") continue;
    return other;
  }
  return "";
}


}  // namespace spicecheck
