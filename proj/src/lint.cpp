#include "spicecheck/lint.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "json.hpp"

namespace spicecheck {

using detail::iequals;
using detail::is_number;
using detail::split_ws;
using detail::to_lower;
using detail::to_upper;
using detail::trim;
using json = nlohmann::ordered_json;

const char* to_string(Complexity c) {
  switch (c) {
    case Complexity::Easy: return "easy";
    case Complexity::Medium: return "medium";
    case Complexity::Difficult: return "difficult";
  }
  return "?";
}

const char* to_string(FixAction a) {
  switch (a) {
    case FixAction::InsertToken: return "InsertToken";
    case FixAction::ReplaceToken: return "ReplaceToken";
    case FixAction::DeleteToken: return "DeleteToken";
    case FixAction::AppendLine: return "AppendLine";
    case FixAction::RenameIdentifier: return "RenameIdentifier";
  }
  return "?";
}

Ruleset default_ruleset() {
  return {
      {"missing-transistor-node", Complexity::Easy,
       "MOSFET line lists fewer than the four required terminal nodes (drain, gate, source, bulk)", {}, true},
      {"missing-end-statement", Complexity::Easy,
       "netlist is not terminated by a .END card", {}, true},
      {"missing-transistor-model", Complexity::Easy,
       "MOSFET line has no model name after its terminal nodes", {}, true},
      {"floating-node", Complexity::Easy,
       "non-ground node touches only one element terminal and is not referenced by any .PRINT or .DC card", {}, true},
      {"extra-transistor-node", Complexity::Medium,
       "MOSFET line lists more than four terminal nodes", {}, true},
      {"incorrect-resistor-value-format", Complexity::Medium,
       "resistor value uses an upper-case scale suffix; suffixes are written lower-case (1K should be 1k)", {}, true},
      {"incorrect-subckt-definition", Complexity::Medium,
       "subcircuit instances reference a name that no .SUBCKT defines", {}, true},
      {"missing-capacitor-value", Complexity::Medium,
       "capacitor line has no value", {}, true},
      {"incorrect-tran-usage", Complexity::Medium,
       "transient analysis card is abbreviated or lacks the simulation duration (.TRAN needs step and stop)", {}, true},
      {"missing-voltage-value", Complexity::Medium,
       "voltage source line has no value", {}, true},
      {"special-char-node-name", Complexity::Difficult,
       "element or node name contains characters outside A-Z, a-z, 0-9 and underscore", {}, true},
      {"incorrect-print-statement", Complexity::Difficult,
       ".PRINT argument is a bare node; it must be wrapped as V(node) or I(device)", {}, true},
      {"incorrect-current-source", Complexity::Difficult,
       "current source value uses the ambiguous upper-case suffix M; write 1m (milli) or 1meg (mega)", {}, true},
      {"incorrect-transistor-name", Complexity::Difficult,
       "MOSFET references a model name that is neither declared by .MODEL nor a known device type", {}, true},
      {"missing-ends", Complexity::Difficult,
       ".SUBCKT block is not closed by .ENDS", {}, true},
      {"incorrect-param-definition", Complexity::Difficult,
       ".PARAM assignment has no value after '='", {}, true},
      {"incorrect-options-directive", Complexity::Difficult,
       "options card is spelled .OPTION; the directive is .OPTIONS", {}, true},
      {"missing-dc-value", Complexity::Difficult,
       ".DC sweep is missing values; each sweep needs source, start, stop and increment", {}, true},
  };
}

const LintRule* find_rule(const Ruleset& rules, const std::string& id) {
  for (const auto& r : rules)
    if (r.id == id) return &r;
  return nullptr;
}

std::string token_shape(const std::string& line) {
  auto tokens = split_ws(trim(line));
  std::string shape;
  auto is_ident = [](const std::string& t) {
    for (char c : t)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return !t.empty();
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    std::string cls;
    if (t[0] == '.') {
      cls = "DOT:" + to_lower(t);
    } else if (i == 0 && std::isalpha(static_cast<unsigned char>(t[0])) &&
               std::string("MRCVIXmrcvix").find(t[0]) != std::string::npos) {
      cls = std::string("E:") + static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    } else if (t.size() >= 3 && (t[0] == 'V' || t[0] == 'v' || t[0] == 'I' || t[0] == 'i') &&
               t[1] == '(' && t.back() == ')') {
      cls = std::string("PROBE:") + static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    } else if (t.find('=') != std::string::npos && t.find('=') > 0) {
      cls = "KV";
    } else if (is_number(t)) {
      cls = "NUM";
    } else if (auto pv = PhysicalValue::parse(t); pv.has_value()) {
      std::size_t j = 0;
      while (j < t.size() && !std::isalpha(static_cast<unsigned char>(t[j]))) ++j;
      cls = "VAL:" + t.substr(j);
    } else if (is_ident(t)) {
      cls = "ID";
    } else {
      cls = "X";
    }
    if (!shape.empty()) shape += ' ';
    shape += cls;
  }
  return shape;
}

namespace {

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

std::string sanitize_identifier(const std::string& s, int line_no) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out += c;
  if (out.empty()) out = "n" + std::to_string(line_no);
  return out;
}

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (std::tolower(static_cast<unsigned char>(a[i - 1])) ==
                                       std::tolower(static_cast<unsigned char>(b[j - 1]))
                                   ? 0
                                   : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Alpha tail of a value token plus the length of its leading scale suffix.
std::pair<std::string, std::size_t> value_suffix(const std::string& raw) {
  std::size_t i = 0;
  if (i < raw.size() && (raw[i] == '+' || raw[i] == '-')) ++i;
  while (i < raw.size() &&
         (std::isdigit(static_cast<unsigned char>(raw[i])) || raw[i] == '.'))
    ++i;
  if (i < raw.size() && (raw[i] == 'e' || raw[i] == 'E') && i + 1 < raw.size()) {
    std::size_t j = i + 1;
    if (raw[j] == '+' || raw[j] == '-') ++j;
    std::size_t d = j;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
    if (j > d) i = j;
  }
  std::string tail = raw.substr(i);
  std::string lower = to_lower(tail);
  std::size_t len = 0;
  if (lower.rfind("meg", 0) == 0) len = 3;
  else if (!lower.empty() && std::string("fpnumkg").find(lower[0]) != std::string::npos) len = 1;
  return {tail, len};
}

struct Detector {
  const Netlist& n;
  const Ruleset& rules;
  std::vector<LintFinding> findings;
  std::set<std::string> models;  // declared, lower-cased

  explicit Detector(const Netlist& netlist, const Ruleset& ruleset)
      : n(netlist), rules(ruleset), models(netlist.declared_models()) {}

  std::string snippet_at(int line_no) const {
    const SourceLine* sl = n.line(line_no);
    return sl ? trim(sl->text) : std::string();
  }

  void add(const std::string& rule_id, int line_no, const std::string& who,
           const std::string& message, std::optional<FixSuggestion> fix) {
    LintFinding f;
    f.rule_id = rule_id;
    f.line_no = line_no;
    f.element_or_card = who;
    f.snippet = snippet_at(line_no);
    f.message = message;
    f.suggestion = std::move(fix);
    findings.push_back(std::move(f));
  }

  std::vector<const Element*> all_elements() const {
    std::vector<const Element*> out;
    for (const auto& e : n.elements) out.push_back(&e);
    for (const auto& [name, def] : n.subcircuits)
      for (const auto& e : def.elements) out.push_back(&e);
    return out;
  }

  std::vector<const ControlCard*> all_cards() const {
    std::vector<const ControlCard*> out;
    for (const auto& c : n.cards) out.push_back(&c);
    for (const auto& [name, def] : n.subcircuits)
      for (const auto& c : def.cards) out.push_back(&c);
    return out;
  }

  bool known_model(const std::string& name) const {
    std::string l = to_lower(name);
    return models.count(l) || l == "nmos" || l == "pmos";
  }

  // --- easy -----------------------------------------------------------

  void missing_transistor_node() {
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::Mosfet || !e->model || e->nodes.size() >= 4) continue;
      FixSuggestion fix;
      fix.action = FixAction::InsertToken;
      fix.payload = "0";
      fix.token_index = 1 + static_cast<int>(e->nodes.size());
      add("missing-transistor-node", e->line_no, e->name,
          "MOSFET '" + e->name + "' lists " + std::to_string(e->nodes.size()) +
              " of 4 terminal nodes; inserting bulk node 0",
          fix);
    }
  }

  void missing_end_statement() {
    if (n.terminated || n.source_lines.empty()) {
      if (!n.terminated && n.source_lines.empty())
        add("missing-end-statement", 1, "", "netlist has no .END card", std::nullopt);
      return;
    }
    int last = n.source_lines.back().line_no;
    FixSuggestion fix;
    fix.action = FixAction::AppendLine;
    fix.payload = ".END";
    fix.insert_after = last;
    add("missing-end-statement", last, "", "netlist is not terminated by .END", fix);
  }

  void missing_transistor_model() {
    std::string fallback = "NMOS";
    for (const ControlCard* c : all_cards()) {
      if (c->kind == CardKind::Model && !c->args.empty()) {
        fallback = c->args[0];
        break;
      }
    }
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::Mosfet || e->model || e->nodes.size() < 4) continue;
      FixSuggestion fix;
      fix.action = FixAction::InsertToken;
      fix.payload = fallback;
      fix.token_index = 1 + static_cast<int>(e->nodes.size());
      add("missing-transistor-model", e->line_no, e->name,
          "MOSFET '" + e->name + "' has no model name; inserting '" + fallback + "'", fix);
    }
  }

  void floating_node() {
    // Nodes referenced by .PRINT/.DC cards are declared observation points.
    std::set<std::string> observed;
    for (const ControlCard* c : all_cards()) {
      if (c->kind != CardKind::Print && c->kind != CardKind::Dc) continue;
      for (const auto& a : c->args) {
        observed.insert(a);
        auto open = a.find('(');
        auto close = a.rfind(')');
        if (open != std::string::npos && close != std::string::npos && close > open) {
          std::string inner = a.substr(open + 1, close - open - 1);
          std::size_t start = 0;
          while (start <= inner.size()) {
            auto comma = inner.find(',', start);
            std::string part = comma == std::string::npos ? inner.substr(start)
                                                          : inner.substr(start, comma - start);
            if (!part.empty()) observed.insert(part);
            if (comma == std::string::npos) break;
            start = comma + 1;
          }
        }
      }
    }

    struct Scope {
      const std::vector<Element>* elements;
      std::set<std::string> ports;
    };
    std::vector<Scope> scopes;
    scopes.push_back({&n.elements, {}});
    for (const auto& [name, def] : n.subcircuits)
      scopes.push_back({&def.elements, {def.ports.begin(), def.ports.end()}});

    for (const auto& scope : scopes) {
      NodeGraph g = connectivity_graph(*scope.elements);
      // floating node -> the single element line touching it
      std::map<int, std::vector<std::string>> by_line;
      for (const auto& [node, deg] : g.degree) {
        if (deg != 1 || node == "0" || scope.ports.count(node) || observed.count(node)) continue;
        for (const auto& e : *scope.elements) {
          if (std::find(e.nodes.begin(), e.nodes.end(), node) != e.nodes.end()) {
            by_line[e.line_no].push_back(node);
            break;
          }
        }
      }
      for (auto& [line_no, node_list] : by_line) {
        std::sort(node_list.begin(), node_list.end());
        std::string joined, probes;
        for (const auto& node : node_list) {
          if (!joined.empty()) joined += ", ";
          joined += "'" + node + "'";
          if (!probes.empty()) probes += ' ';
          probes += "V(" + node + ")";
        }
        FixSuggestion fix;
        fix.action = FixAction::AppendLine;
        fix.payload = ".PRINT DC " + probes;
        fix.insert_after = 0;  // end of netlist, before .END
        add("floating-node", line_no, "",
            "node " + joined + " touches only one terminal and is never observed; declaring it "
            "as an output with .PRINT",
            fix);
      }
    }
  }

  // --- medium ---------------------------------------------------------

  void extra_transistor_node() {
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::Mosfet || e->nodes.size() <= 4) continue;
      FixSuggestion fix;
      fix.action = FixAction::DeleteToken;
      fix.token_index = 1 + 4;  // the fifth node
      fix.span = static_cast<int>(e->nodes.size()) - 4;
      add("extra-transistor-node", e->line_no, e->name,
          "MOSFET '" + e->name + "' lists " + std::to_string(e->nodes.size()) +
              " terminal nodes; a MOSFET takes exactly 4",
          fix);
    }
  }

  void incorrect_resistor_value_format() {
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::Resistor || !e->value) continue;
      auto [tail, len] = value_suffix(e->value->raw);
      if (len == 0) continue;
      bool upper = false;
      for (std::size_t i = 0; i < len; ++i)
        if (std::isupper(static_cast<unsigned char>(tail[i]))) upper = true;
      if (!upper) continue;
      std::string fixed = e->value->raw;
      std::size_t tail_pos = fixed.size() - tail.size();
      for (std::size_t i = 0; i < len; ++i)
        fixed[tail_pos + i] =
            static_cast<char>(std::tolower(static_cast<unsigned char>(fixed[tail_pos + i])));
      FixSuggestion fix;
      fix.action = FixAction::ReplaceToken;
      fix.token_index = 1 + static_cast<int>(e->nodes.size());
      fix.payload = fixed;
      add("incorrect-resistor-value-format", e->line_no, e->name,
          "resistor '" + e->name + "' value '" + e->value->raw +
              "' uses an upper-case suffix; write '" + fixed + "'",
          fix);
    }
  }

  void incorrect_subckt_definition() {
    std::map<std::string, const Element*> refs;  // lower name -> first instance
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::SubcktInstance || !e->model) continue;
      refs.emplace(to_lower(*e->model), e);
    }
    std::set<std::string> defined;
    for (const auto& [name, def] : n.subcircuits) defined.insert(to_lower(name));

    std::vector<std::pair<std::string, const Element*>> undefined;
    for (const auto& [name, e] : refs)
      if (!defined.count(name)) undefined.push_back({name, e});
    std::vector<const SubcircuitDef*> orphans;
    for (const auto& [name, def] : n.subcircuits)
      if (!refs.count(to_lower(name))) orphans.push_back(&def);

    if (undefined.size() == 1 && orphans.size() == 1) {
      const SubcircuitDef* def = orphans.front();
      const std::string& wanted = *undefined.front().second->model;
      FixSuggestion fix;
      fix.action = FixAction::RenameIdentifier;
      fix.target = def->name;
      fix.payload = wanted;
      add("incorrect-subckt-definition", def->line_no, def->name,
          "subcircuit '" + def->name + "' is never instantiated while instances reference "
          "undefined '" + wanted + "'; renaming the definition",
          fix);
      return;
    }
    for (const auto& [name, e] : undefined) {
      add("incorrect-subckt-definition", e->line_no, e->name,
          "instance '" + e->name + "' references subcircuit '" + *e->model +
              "' which no .SUBCKT defines",
          std::nullopt);
    }
  }

  void missing_capacitor_value() {
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::Capacitor || e->value) continue;
      FixSuggestion fix;
      fix.action = FixAction::InsertToken;
      fix.payload = "1p";
      fix.token_index = 1 + static_cast<int>(e->nodes.size());
      add("missing-capacitor-value", e->line_no, e->name,
          "capacitor '" + e->name + "' has no value; inserting placeholder 1p", fix);
    }
  }

  void incorrect_tran_usage() {
    for (const ControlCard* c : all_cards()) {
      bool truncated = c->kind == CardKind::Unknown && iequals(c->directive, ".tr");
      bool short_args = c->kind == CardKind::Tran && c->args.size() < 2;
      if (!truncated && !short_args) continue;
      std::string step = c->args.empty() ? "1n" : c->args[0];
      // duration placeholder: 1000 sweep steps
      std::string dur = "1u";
      if (auto pv = PhysicalValue::parse(step)) {
        static const std::map<std::string, std::string> ladder = {
            {"f", "p"}, {"p", "n"}, {"n", "u"}, {"u", "m"}, {"m", ""}};
        auto it = ladder.find(pv->suffix);
        std::ostringstream mag;
        mag << pv->magnitude;
        if (it != ladder.end()) dur = mag.str() + it->second;
        else {
          std::ostringstream big;
          big << pv->magnitude * 1000.0;
          dur = big.str() + pv->suffix;
        }
      }
      FixSuggestion fix;
      fix.action = FixAction::ReplaceToken;
      fix.token_index = 0;
      fix.span = 1 + static_cast<int>(c->args.size());
      fix.payload = ".TRAN " + step + " " + dur;
      add("incorrect-tran-usage", c->line_no, c->directive,
          "transient card '" + c->directive + "' needs step and stop times; rewriting as '" +
              fix.payload + "'",
          fix);
    }
  }

  void missing_voltage_value() {
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::VSource || e->value) continue;
      FixSuggestion fix;
      fix.action = FixAction::InsertToken;
      fix.payload = "0";
      fix.token_index =
          1 + static_cast<int>(e->nodes.size()) + (e->dc_keyword ? 1 : 0);
      add("missing-voltage-value", e->line_no, e->name,
          "voltage source '" + e->name + "' has no value; inserting placeholder 0", fix);
    }
  }

  // --- difficult ------------------------------------------------------

  void special_char_node_name() {
    std::map<int, std::vector<std::string>> by_line;
    for (const Element* e : all_elements()) {
      if (!valid_identifier(e->name)) by_line[e->line_no].push_back(e->name);
      for (const auto& node : e->nodes)
        if (!valid_identifier(node)) by_line[e->line_no].push_back(node);
    }
    for (auto& [line_no, names] : by_line) {
      std::sort(names.begin(), names.end());
      names.erase(std::unique(names.begin(), names.end()), names.end());
      FixSuggestion fix;
      fix.action = FixAction::RenameIdentifier;
      fix.target = names.front();
      fix.payload = sanitize_identifier(names.front(), line_no);
      std::string joined;
      for (const auto& name : names) {
        if (!joined.empty()) joined += ", ";
        joined += "'" + name + "'";
      }
      add("special-char-node-name", line_no, names.front(),
          "identifier " + joined + " contains characters outside [A-Za-z0-9_]", fix);
    }
  }

  void incorrect_print_statement() {
    for (const ControlCard* c : all_cards()) {
      if (c->kind != CardKind::Print) continue;
      for (std::size_t i = 0; i < c->args.size(); ++i) {
        const std::string& a = c->args[i];
        if (i == 0 && (iequals(a, "DC") || iequals(a, "TRAN") || iequals(a, "AC"))) continue;
        bool probe = a.size() >= 4 && (a[0] == 'V' || a[0] == 'v' || a[0] == 'I' || a[0] == 'i') &&
                     a[1] == '(' && a.back() == ')';
        if (probe) continue;
        FixSuggestion fix;
        fix.action = FixAction::ReplaceToken;
        fix.token_index = 1 + static_cast<int>(i);
        fix.payload = "V(" + a + ")";
        add("incorrect-print-statement", c->line_no, c->directive,
            ".PRINT argument '" + a + "' is a bare node; write 'V(" + a + ")'", fix);
        break;  // one finding per line
      }
    }
  }

  void incorrect_current_source() {
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::ISource || !e->value) continue;
      auto [tail, len] = value_suffix(e->value->raw);
      if (tail != "M") continue;  // only the bare ambiguous upper-case M
      std::string fixed = e->value->raw;
      fixed.back() = 'm';
      FixSuggestion fix;
      fix.action = FixAction::ReplaceToken;
      fix.token_index =
          1 + static_cast<int>(e->nodes.size()) + (e->dc_keyword ? 1 : 0);
      fix.payload = fixed;
      add("incorrect-current-source", e->line_no, e->name,
          "current source '" + e->name + "' value '" + e->value->raw +
              "' is ambiguous; write '" + fixed + "' (milli) or '" + e->value->raw.substr(0, e->value->raw.size() - 1) + "meg' (mega)",
          fix);
    }
  }

  void incorrect_transistor_name() {
    std::vector<std::string> known;
    for (const ControlCard* c : all_cards())
      if (c->kind == CardKind::Model && !c->args.empty()) known.push_back(c->args[0]);
    known.push_back("NMOS");
    known.push_back("PMOS");
    for (const Element* e : all_elements()) {
      if (e->kind != ElementKind::Mosfet || !e->model || known_model(*e->model)) continue;
      std::string best = known.front();
      int best_d = edit_distance(*e->model, best);
      for (const auto& cand : known) {
        int d = edit_distance(*e->model, cand);
        if (d < best_d || (d == best_d && cand < best)) {
          best = cand;
          best_d = d;
        }
      }
      FixSuggestion fix;
      fix.action = FixAction::ReplaceToken;
      fix.token_index = 1 + static_cast<int>(e->nodes.size());
      fix.payload = best;
      add("incorrect-transistor-name", e->line_no, e->name,
          "MOSFET '" + e->name + "' references unknown model '" + *e->model +
              "'; closest known model is '" + best + "'",
          fix);
    }
  }

  void missing_ends() {
    for (const auto& [name, def] : n.subcircuits) {
      if (def.terminated) continue;
      int last = def.line_no;
      for (const auto& e : def.elements) last = std::max(last, e.line_no);
      for (const auto& c : def.cards) last = std::max(last, c.line_no);
      FixSuggestion fix;
      fix.action = FixAction::AppendLine;
      fix.payload = ".ENDS " + def.name;
      fix.insert_after = last;
      add("missing-ends", def.line_no, def.name,
          "subcircuit '" + def.name + "' is not closed by .ENDS", fix);
    }
  }

  void incorrect_param_definition() {
    for (const ControlCard* c : all_cards()) {
      if (c->kind != CardKind::Param) continue;
      for (std::size_t i = 0; i < c->args.size(); ++i) {
        const std::string& a = c->args[i];
        auto eq = a.find('=');
        bool bad = eq == std::string::npos || eq == 0 || eq + 1 == a.size();
        if (!bad) continue;
        std::string key = eq == std::string::npos ? a : a.substr(0, eq);
        FixSuggestion fix;
        fix.action = FixAction::ReplaceToken;
        fix.token_index = 1 + static_cast<int>(i);
        fix.payload = key + "=1";
        add("incorrect-param-definition", c->line_no, c->directive,
            ".PARAM assignment '" + a + "' has no value; supplying placeholder 1", fix);
        break;
      }
    }
  }

  void incorrect_options_directive() {
    for (const ControlCard* c : all_cards()) {
      if (c->kind != CardKind::Unknown || !iequals(c->directive, ".OPTION")) continue;
      FixSuggestion fix;
      fix.action = FixAction::ReplaceToken;
      fix.token_index = 0;
      fix.payload = ".OPTIONS";
      add("incorrect-options-directive", c->line_no, c->directive,
          "directive '" + c->directive + "' should be .OPTIONS", fix);
    }
  }

  void missing_dc_value() {
    for (const ControlCard* c : all_cards()) {
      if (c->kind != CardKind::Dc || c->args.empty() || c->args.size() % 4 == 0) continue;
      std::optional<FixSuggestion> fix;
      if (c->args.size() % 4 == 3) {
        FixSuggestion f;
        f.action = FixAction::InsertToken;
        f.token_index = 1 + static_cast<int>(c->args.size());
        f.payload = c->args.size() >= 2 ? c->args[1] : "0.1";
        fix = f;
      }
      add("missing-dc-value", c->line_no, c->directive,
          ".DC sweep lists " + std::to_string(c->args.size()) +
              " values; each sweep needs source, start, stop and increment",
          fix);
    }
  }

  void run(const std::string& id) {
    if (id == "missing-transistor-node") missing_transistor_node();
    else if (id == "missing-end-statement") missing_end_statement();
    else if (id == "missing-transistor-model") missing_transistor_model();
    else if (id == "floating-node") floating_node();
    else if (id == "extra-transistor-node") extra_transistor_node();
    else if (id == "incorrect-resistor-value-format") incorrect_resistor_value_format();
    else if (id == "incorrect-subckt-definition") incorrect_subckt_definition();
    else if (id == "missing-capacitor-value") missing_capacitor_value();
    else if (id == "incorrect-tran-usage") incorrect_tran_usage();
    else if (id == "missing-voltage-value") missing_voltage_value();
    else if (id == "special-char-node-name") special_char_node_name();
    else if (id == "incorrect-print-statement") incorrect_print_statement();
    else if (id == "incorrect-current-source") incorrect_current_source();
    else if (id == "incorrect-transistor-name") incorrect_transistor_name();
    else if (id == "missing-ends") missing_ends();
    else if (id == "incorrect-param-definition") incorrect_param_definition();
    else if (id == "incorrect-options-directive") incorrect_options_directive();
    else if (id == "missing-dc-value") missing_dc_value();
    else throw Error("unknown-rule", "no lint rule with id '" + id + "'");
  }
};

}  // namespace

BugReport lint(const Netlist& n, const Ruleset& rules) {
  // Configuration check before any linting.
  Ruleset registry = default_ruleset();
  for (const auto& r : rules)
    if (!find_rule(registry, r.id))
      throw Error("unknown-rule", "no lint rule with id '" + r.id + "'");

  Detector det(n, rules);
  for (const auto& r : rules) {
    if (!r.enabled) continue;
    det.run(r.id);
  }

  // Drop findings matching a rule exception, dedupe to one per (rule, line),
  // order by line then rule id.
  std::vector<LintFinding> kept;
  std::set<std::pair<std::string, int>> seen;
  for (auto& f : det.findings) {
    const LintRule* rule = find_rule(rules, f.rule_id);
    if (rule && rule->exceptions.count(token_shape(f.snippet))) continue;
    if (!seen.insert({f.rule_id, f.line_no}).second) continue;
    kept.push_back(std::move(f));
  }
  std::sort(kept.begin(), kept.end(), [](const LintFinding& a, const LintFinding& b) {
    if (a.line_no != b.line_no) return a.line_no < b.line_no;
    return a.rule_id < b.rule_id;
  });

  BugReport report;
  report.findings = std::move(kept);
  return report;
}

namespace {

struct LogicalLine {
  int first_phys = 0;           // 1-based physical line number
  std::vector<int> phys_lines;  // indexes into the physical array
  std::string joined;
  bool touched = false;
};

}  // namespace

FixOutcome apply_fixes(const std::string& text, const std::vector<LintFinding>& findings) {
  FixOutcome out;
  bool any = false;
  for (const auto& f : findings)
    if (f.suggestion) any = true;
  if (!any) {
    out.text = text;
    return out;
  }

  // Physical lines, preserving the exact absence/presence of a trailing newline.
  std::vector<std::string> phys;
  std::size_t start = 0;
  bool trailing_newline = !text.empty() && text.back() == '\n';
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (start < text.size()) phys.push_back(text.substr(start));
      break;
    }
    phys.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }

  // Fold into logical lines (continuations join their opener).
  std::vector<LogicalLine> logical;
  for (std::size_t i = 0; i < phys.size(); ++i) {
    std::string line = phys[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = detail::trim(line);
    if (!t.empty() && t[0] == '+' && !logical.empty()) {
      logical.back().joined += " " + detail::trim(t.substr(1));
      logical.back().phys_lines.push_back(static_cast<int>(i));
    } else {
      LogicalLine ll;
      ll.first_phys = static_cast<int>(i) + 1;
      ll.phys_lines.push_back(static_cast<int>(i));
      ll.joined = line;
      logical.push_back(std::move(ll));
    }
  }
  auto logical_at = [&](int line_no) -> LogicalLine* {
    for (auto& ll : logical)
      if (ll.first_phys == line_no) return &ll;
    return nullptr;
  };

  struct TokenEdit {
    const LintFinding* finding;
    int begin;
    int end;  // [begin, end) token span; begin==end for inserts
  };
  std::map<int, std::vector<TokenEdit>> edits_by_line;
  std::vector<const LintFinding*> appends;
  std::vector<const LintFinding*> renames;

  for (const auto& f : findings) {
    if (!f.suggestion) continue;
    const FixSuggestion& s = *f.suggestion;
    switch (s.action) {
      case FixAction::AppendLine: appends.push_back(&f); break;
      case FixAction::RenameIdentifier: renames.push_back(&f); break;
      case FixAction::InsertToken:
        edits_by_line[f.line_no].push_back({&f, s.token_index, s.token_index});
        break;
      case FixAction::ReplaceToken:
      case FixAction::DeleteToken:
        edits_by_line[f.line_no].push_back({&f, s.token_index, s.token_index + std::max(1, s.span)});
        break;
    }
  }

  // Token-level edits: ascending line order, ascending token order per line.
  for (auto& [line_no, edits] : edits_by_line) {
    LogicalLine* ll = logical_at(line_no);
    if (!ll) continue;
    std::sort(edits.begin(), edits.end(), [](const TokenEdit& a, const TokenEdit& b) {
      if (a.begin != b.begin) return a.begin < b.begin;
      return a.end < b.end;
    });
    // conflict scan: overlapping non-empty spans are skipped pairwise
    std::set<const LintFinding*> skip;
    for (std::size_t i = 0; i < edits.size(); ++i) {
      for (std::size_t j = i + 1; j < edits.size(); ++j) {
        bool overlap = edits[i].end > edits[j].begin && edits[j].end > edits[i].begin;
        if (overlap) {
          skip.insert(edits[i].finding);
          skip.insert(edits[j].finding);
          out.conflicts.push_back("line " + std::to_string(line_no) + ": '" +
                                  edits[i].finding->rule_id + "' and '" +
                                  edits[j].finding->rule_id + "' edit the same tokens");
        }
      }
    }
    auto tokens = detail::split_ws(ll->joined);
    int offset = 0;
    for (const auto& e : edits) {
      if (skip.count(e.finding)) continue;
      const FixSuggestion& s = *e.finding->suggestion;
      int begin = e.begin + offset;
      if (begin < 0 || begin > static_cast<int>(tokens.size())) continue;
      auto payload_tokens = detail::split_ws(s.payload);
      switch (s.action) {
        case FixAction::InsertToken: {
          tokens.insert(tokens.begin() + begin, payload_tokens.begin(), payload_tokens.end());
          offset += static_cast<int>(payload_tokens.size());
          ++out.applied;
          break;
        }
        case FixAction::ReplaceToken: {
          int span = std::max(1, s.span);
          span = std::min<int>(span, static_cast<int>(tokens.size()) - begin);
          tokens.erase(tokens.begin() + begin, tokens.begin() + begin + span);
          tokens.insert(tokens.begin() + begin, payload_tokens.begin(), payload_tokens.end());
          offset += static_cast<int>(payload_tokens.size()) - span;
          ++out.applied;
          break;
        }
        case FixAction::DeleteToken: {
          int span = std::max(1, s.span);
          span = std::min<int>(span, static_cast<int>(tokens.size()) - begin);
          tokens.erase(tokens.begin() + begin, tokens.begin() + begin + span);
          offset -= span;
          ++out.applied;
          break;
        }
        default: break;
      }
    }
    std::string rebuilt;
    for (const auto& t : tokens) {
      if (!rebuilt.empty()) rebuilt += ' ';
      rebuilt += t;
    }
    ll->joined = rebuilt;
    ll->touched = true;
  }

  // Netlist-wide identifier renames operate on every logical line's tokens.
  for (const LintFinding* f : renames) {
    const FixSuggestion& s = *f->suggestion;
    if (s.target.empty() || s.target == s.payload) continue;
    for (auto& ll : logical) {
      if (&ll == &logical.front()) continue;  // title line stays verbatim
      std::string t = detail::trim(ll.joined);
      if (!t.empty() && t[0] == '*') continue;
      auto tokens = detail::split_ws(ll.joined);
      bool changed = false;
      for (auto& tok : tokens) {
        if (tok == s.target) {
          tok = s.payload;
          changed = true;
        } else if (tok.size() >= 4 && (tok[1] == '(') && tok.back() == ')' &&
                   tok.substr(2, tok.size() - 3) == s.target) {
          tok = tok.substr(0, 2) + s.payload + ")";
          changed = true;
        }
      }
      if (changed) {
        std::string rebuilt;
        for (const auto& tok : tokens) {
          if (!rebuilt.empty()) rebuilt += ' ';
          rebuilt += tok;
        }
        ll.joined = rebuilt;
        ll.touched = true;
      }
    }
    ++out.applied;
  }

  // Emit text: untouched logical lines keep their original physical layout.
  std::vector<std::string> out_lines;
  std::vector<std::pair<int, std::string>> pending_inserts;  // (after logical index, text)
  for (const LintFinding* f : appends) {
    const FixSuggestion& s = *f->suggestion;
    int after_idx = -1;
    if (s.insert_after > 0) {
      for (std::size_t i = 0; i < logical.size(); ++i) {
        if (logical[i].first_phys <= s.insert_after) after_idx = static_cast<int>(i);
      }
    } else {
      // before the first .END card, else end of file
      after_idx = static_cast<int>(logical.size()) - 1;
      for (std::size_t i = 1; i < logical.size(); ++i) {
        auto toks = detail::split_ws(logical[i].joined);
        if (!toks.empty() && detail::iequals(toks[0], ".END")) {
          after_idx = static_cast<int>(i) - 1;
          break;
        }
      }
    }
    pending_inserts.push_back({after_idx, s.payload});
    ++out.applied;
  }

  for (std::size_t i = 0; i < logical.size(); ++i) {
    const LogicalLine& ll = logical[i];
    if (ll.touched) {
      out_lines.push_back(ll.joined);
    } else {
      for (int pi : ll.phys_lines) out_lines.push_back(phys[pi]);
    }
    for (const auto& [after, text_line] : pending_inserts)
      if (after == static_cast<int>(i)) out_lines.push_back(text_line);
  }
  for (const auto& [after, text_line] : pending_inserts)
    if (after < 0) out_lines.insert(out_lines.begin(), text_line);

  std::string result;
  for (std::size_t i = 0; i < out_lines.size(); ++i) {
    result += out_lines[i];
    if (i + 1 < out_lines.size() || trailing_newline) result += '\n';
  }
  out.text = result;
  return out;
}

Ruleset refine_ruleset(const Ruleset& rules,
                       const std::vector<std::pair<LintFinding, Verdict>>& feedback) {
  Ruleset refined = rules;
  for (const auto& [finding, verdict] : feedback) {
    if (verdict != Verdict::FalsePositive) continue;
    for (auto& r : refined) {
      if (r.id == finding.rule_id) {
        r.exceptions.insert(token_shape(finding.snippet));
        break;
      }
    }
  }
  return refined;
}

std::string report_to_json(const BugReport& report, const Ruleset& rules) {
  json j;
  j["findings"] = json::array();
  int easy = 0, medium = 0, difficult = 0;
  for (const auto& f : report.findings) {
    json jf;
    jf["rule_id"] = f.rule_id;
    jf["line"] = f.line_no;
    jf["snippet"] = f.snippet;
    jf["message"] = f.message;
    if (f.suggestion) {
      jf["suggestion"] = {{"action", to_string(f.suggestion->action)},
                          {"payload", f.suggestion->payload}};
    } else {
      jf["suggestion"] = nullptr;
    }
    j["findings"].push_back(jf);
    if (const LintRule* r = find_rule(rules, f.rule_id)) {
      if (r->complexity == Complexity::Easy) ++easy;
      else if (r->complexity == Complexity::Medium) ++medium;
      else ++difficult;
    }
  }
  j["summary"] = {{"easy", easy},
                  {"medium", medium},
                  {"difficult", difficult},
                  {"total", report.findings.size()}};
  if (report.corrected_text) j["corrected_text"] = *report.corrected_text;
  return j.dump(2) + "\n";
}

std::string ruleset_to_json(const Ruleset& rules) {
  json j;
  j["rules"] = json::array();
  for (const auto& r : rules) {
    json jr;
    jr["id"] = r.id;
    jr["complexity"] = to_string(r.complexity);
    jr["description"] = r.description;
    jr["enabled"] = r.enabled;
    jr["exceptions"] = json::array();
    for (const auto& e : r.exceptions) jr["exceptions"].push_back(e);
    j["rules"].push_back(jr);
  }
  return j.dump(2) + "\n";
}

Ruleset ruleset_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  Ruleset out;
  for (const auto& jr : j.at("rules")) {
    LintRule r;
    r.id = jr.at("id").get<std::string>();
    std::string c = jr.value("complexity", "easy");
    r.complexity = c == "medium" ? Complexity::Medium
                   : c == "difficult" ? Complexity::Difficult
                                      : Complexity::Easy;
    r.description = jr.value("description", "");
    r.enabled = jr.value("enabled", true);
    if (jr.contains("exceptions"))
      for (const auto& e : jr.at("exceptions")) r.exceptions.insert(e.get<std::string>());
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace spicecheck
