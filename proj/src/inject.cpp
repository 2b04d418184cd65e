#include "spicecheck/inject.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace spicecheck {

using detail::iequals;
using detail::Rng;
using detail::split_ws;
using detail::to_lower;
using detail::trim;
using json = nlohmann::ordered_json;

namespace {

// One applicable corruption site. Mutations operate on the logical line array;
// truth records the finding the default linter is expected to produce.
struct Site {
  int line_idx = -1;  // 0-based logical index; -1 = no single line (append-style)
  std::function<void(std::vector<std::string>&, std::vector<int>&, Rng&)> apply;
  // anchor for the expected finding: kind 0 = the mutated/kept line itself,
  // 1 = last line of the file, 2 = explicit logical index
  int anchor_kind = 0;
  int anchor_idx = -1;
};

struct LineView {
  std::vector<std::string> lines;          // logical line texts
  std::map<int, int> lineno_to_idx;        // AST line_no -> logical index
};

LineView logical_lines(const Netlist& n) {
  LineView v;
  for (std::size_t i = 0; i < n.source_lines.size(); ++i) {
    v.lines.push_back(n.source_lines[i].text);
    v.lineno_to_idx[n.source_lines[i].line_no] = static_cast<int>(i);
  }
  return v;
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string number_part(const std::string& raw) {
  std::size_t i = 0;
  if (i < raw.size() && (raw[i] == '+' || raw[i] == '-')) ++i;
  while (i < raw.size() && (std::isdigit(static_cast<unsigned char>(raw[i])) || raw[i] == '.')) ++i;
  return raw.substr(0, i);
}

// Sites per rule id, enumerated against the parsed netlist. Only top-level
// elements are targeted; cards are taken from any scope.
std::vector<Site> enumerate_sites(const Netlist& n, const LineView& view,
                                  const std::string& rule_id) {
  std::vector<Site> sites;
  auto idx_of = [&view](int line_no) {
    auto it = view.lineno_to_idx.find(line_no);
    return it == view.lineno_to_idx.end() ? -1 : it->second;
  };
  auto token_edit = [](int tok_idx, std::function<void(std::vector<std::string>&, Rng&)> fn) {
    (void)tok_idx;
    return fn;
  };
  (void)token_edit;

  auto graph = connectivity_graph(n);

  if (rule_id == "missing-transistor-node") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::Mosfet || !e.model || e.nodes.size() != 4) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks.erase(toks.begin() + 4);  // bulk node
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "missing-end-statement") {
    if (n.terminated) {
      for (std::size_t i = 0; i < view.lines.size(); ++i) {
        auto toks = split_ws(trim(view.lines[i]));
        if (!toks.empty() && iequals(toks[0], ".END")) {
          int li = static_cast<int>(i);
          Site s;
          s.line_idx = li;
          s.anchor_kind = 1;
          s.apply = [li](std::vector<std::string>&, std::vector<int>& removed, Rng&) {
            removed.push_back(li);
          };
          sites.push_back(std::move(s));
          break;
        }
      }
    }
  } else if (rule_id == "missing-transistor-model") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::Mosfet || !e.model || e.nodes.size() != 4) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks.erase(toks.begin() + 5);  // model
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "floating-node") {
    for (const auto& e : n.elements) {
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      for (std::size_t k = 0; k < e.nodes.size(); ++k) {
        const std::string& node = e.nodes[k];
        if (node == "0") continue;
        auto it = graph.degree.find(node);
        if (it == graph.degree.end() || it->second < 3) continue;
        int tok = 1 + static_cast<int>(k);
        sites.push_back({li, [li, tok](std::vector<std::string>& lines, std::vector<int>&, Rng& rng) {
                           auto toks = split_ws(lines[li]);
                           toks[tok] = "fl" + std::to_string(1 + rng.next_below(97));
                           lines[li] = join_tokens(toks);
                         }});
      }
    }
  } else if (rule_id == "extra-transistor-node") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::Mosfet || !e.model || e.nodes.size() != 4) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks.insert(toks.begin() + 5, toks[3]);  // duplicate the source node
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "incorrect-resistor-value-format") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::Resistor || !e.value || e.value->suffix.empty()) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      int tok = 1 + static_cast<int>(e.nodes.size());
      sites.push_back({li, [li, tok](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         for (char& c : toks[tok])
                           c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "incorrect-subckt-definition") {
    std::set<std::string> referenced;
    for (const auto& e : n.elements)
      if (e.kind == ElementKind::SubcktInstance && e.model) referenced.insert(to_lower(*e.model));
    for (const auto& [name, def] : n.subcircuits) {
      if (!referenced.count(to_lower(name))) continue;
      int li = idx_of(def.line_no);
      if (li < 0) continue;
      std::string old_name = name;
      Site s;
      s.line_idx = li;
      s.apply = [li, old_name](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
        std::string bogus = old_name + "x";
        for (auto& line : lines) {
          auto toks = split_ws(line);
          if (toks.size() >= 2 && (iequals(toks[0], ".SUBCKT") || iequals(toks[0], ".ENDS")) &&
              toks[1] == old_name) {
            toks[1] = bogus;
            line = join_tokens(toks);
          }
        }
        (void)li;
      };
      sites.push_back(std::move(s));
    }
  } else if (rule_id == "missing-capacitor-value") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::Capacitor || !e.value) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      int tok = 1 + static_cast<int>(e.nodes.size());
      sites.push_back({li, [li, tok](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks.erase(toks.begin() + tok);
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "incorrect-tran-usage") {
    for (const auto& c : n.cards) {
      if (c.kind != CardKind::Tran || c.args.size() < 2) continue;
      int li = idx_of(c.line_no);
      if (li < 0) continue;
      std::string step = c.args[0];
      sites.push_back({li, [li, step](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         lines[li] = ".tr " + step;
                       }});
    }
  } else if (rule_id == "missing-voltage-value") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::VSource || !e.value) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      int tok = 1 + static_cast<int>(e.nodes.size()) + (e.dc_keyword ? 1 : 0);
      sites.push_back({li, [li, tok](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks.erase(toks.begin() + tok);
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "special-char-node-name") {
    for (const auto& e : n.elements) {
      int li = idx_of(e.line_no);
      if (li < 0 || e.name.size() < 2) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks[0] = toks[0].substr(0, 1) + "!" + toks[0].substr(1);
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "incorrect-print-statement") {
    for (const auto& c : n.cards) {
      if (c.kind != CardKind::Print) continue;
      int li = idx_of(c.line_no);
      if (li < 0) continue;
      for (std::size_t i = 0; i < c.args.size(); ++i) {
        const std::string& a = c.args[i];
        if (a.size() >= 4 && (a[0] == 'V' || a[0] == 'v') && a[1] == '(' && a.back() == ')') {
          int tok = 1 + static_cast<int>(i);
          std::string inner = a.substr(2, a.size() - 3);
          sites.push_back(
              {li, [li, tok, inner](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                 auto toks = split_ws(lines[li]);
                 toks[tok] = inner;
                 lines[li] = join_tokens(toks);
               }});
        }
      }
    }
  } else if (rule_id == "incorrect-current-source") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::ISource || !e.value) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      int tok = 1 + static_cast<int>(e.nodes.size()) + (e.dc_keyword ? 1 : 0);
      std::string num = number_part(e.value->raw);
      sites.push_back({li, [li, tok, num](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks[tok] = num + "M";
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "incorrect-transistor-name") {
    for (const auto& e : n.elements) {
      if (e.kind != ElementKind::Mosfet || !e.model || e.nodes.size() != 4) continue;
      std::string l = to_lower(*e.model);
      if (l.rfind("nmos", 0) != 0 && l.rfind("pmos", 0) != 0) continue;
      int li = idx_of(e.line_no);
      if (li < 0) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks[5] += "C";
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "missing-ends") {
    for (const auto& [name, def] : n.subcircuits) {
      if (!def.terminated) continue;
      int subckt_idx = idx_of(def.line_no);
      // find the .ENDS line closing this block: first .ENDS after the last body line
      int last_body = subckt_idx;
      for (const auto& e : def.elements) last_body = std::max(last_body, idx_of(e.line_no));
      for (const auto& c : def.cards) last_body = std::max(last_body, idx_of(c.line_no));
      int ends_idx = -1;
      for (std::size_t i = static_cast<std::size_t>(last_body) + 1; i < view.lines.size(); ++i) {
        auto toks = split_ws(trim(view.lines[i]));
        if (!toks.empty() && iequals(toks[0], ".ENDS")) {
          ends_idx = static_cast<int>(i);
          break;
        }
      }
      if (ends_idx < 0 || subckt_idx < 0) continue;
      Site s;
      s.line_idx = ends_idx;
      s.anchor_kind = 2;
      s.anchor_idx = subckt_idx;
      s.apply = [ends_idx](std::vector<std::string>&, std::vector<int>& removed, Rng&) {
        removed.push_back(ends_idx);
      };
      sites.push_back(std::move(s));
    }
  } else if (rule_id == "incorrect-param-definition") {
    for (const auto& c : n.cards) {
      if (c.kind != CardKind::Param) continue;
      int li = idx_of(c.line_no);
      if (li < 0) continue;
      for (std::size_t i = 0; i < c.args.size(); ++i) {
        auto eq = c.args[i].find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == c.args[i].size()) continue;
        int tok = 1 + static_cast<int>(i);
        std::string key = c.args[i].substr(0, eq);
        sites.push_back(
            {li, [li, tok, key](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
               auto toks = split_ws(lines[li]);
               toks[tok] = key + "=";
               lines[li] = join_tokens(toks);
             }});
      }
    }
  } else if (rule_id == "incorrect-options-directive") {
    for (const auto& c : n.cards) {
      if (c.kind != CardKind::Options) continue;
      int li = idx_of(c.line_no);
      if (li < 0) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks[0] = ".OPTION";
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else if (rule_id == "missing-dc-value") {
    for (const auto& c : n.cards) {
      if (c.kind != CardKind::Dc || c.args.size() != 4) continue;
      int li = idx_of(c.line_no);
      if (li < 0) continue;
      sites.push_back({li, [li](std::vector<std::string>& lines, std::vector<int>&, Rng&) {
                         auto toks = split_ws(lines[li]);
                         toks.pop_back();
                         lines[li] = join_tokens(toks);
                       }});
    }
  } else {
    throw Error("unknown-rule", "no injector for rule '" + rule_id + "'");
  }
  return sites;
}

std::string emit(const std::vector<std::string>& lines, const std::vector<int>& removed) {
  std::set<int> gone(removed.begin(), removed.end());
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (gone.count(static_cast<int>(i))) continue;
    out += lines[i];
    out += '\n';
  }
  return out;
}

int final_index(int orig_idx, const std::vector<int>& removed) {
  int shift = 0;
  for (int r : removed)
    if (r < orig_idx) ++shift;
  return orig_idx - shift;
}

}  // namespace

std::vector<std::string> applicable_rules(const Netlist& n) {
  LineView view = logical_lines(n);
  std::vector<std::string> out;
  for (const auto& rule : default_ruleset())
    if (!enumerate_sites(n, view, rule.id).empty()) out.push_back(rule.id);
  return out;
}

InjectionResult inject_rule(const Netlist& n, const std::string& rule_id, std::uint64_t seed) {
  LineView view = logical_lines(n);
  auto sites = enumerate_sites(n, view, rule_id);
  if (sites.empty())
    throw Error("insufficient-sites", "netlist has no site for rule '" + rule_id + "'");
  Rng rng(detail::mix(seed, detail::fnv1a(rule_id)));
  const Site& site = sites[rng.next_below(sites.size())];

  std::vector<std::string> lines = view.lines;
  std::vector<int> removed;
  site.apply(lines, removed, rng);

  InjectionResult result;
  result.text = emit(lines, removed);
  result.record.kind = InjectionKind::Bugs;
  int truth_line = 0;
  if (site.anchor_kind == 1) {
    truth_line = static_cast<int>(lines.size()) - static_cast<int>(removed.size());
  } else {
    int anchor = site.anchor_kind == 2 ? site.anchor_idx : site.line_idx;
    truth_line = final_index(anchor, removed) + 1;
  }
  result.record.bug_truth.push_back({rule_id, truth_line});
  return result;
}

InjectionResult inject_bugs(const Netlist& n, const BugPlan& plan) {
  if (lint(n, default_ruleset()).findings.size() != 0)
    throw Error("netlist-not-clean", "bug injection requires a lint-clean netlist");

  LineView view = logical_lines(n);
  Rng rng(plan.seed);

  struct Slot {
    Complexity complexity;
    int count;
  };
  std::vector<Slot> slots = {{Complexity::Easy, plan.easy},
                             {Complexity::Medium, plan.medium},
                             {Complexity::Difficult, plan.difficult}};

  // Pick distinct rules per complexity class among those with available sites.
  std::vector<std::string> chosen;
  for (const auto& slot : slots) {
    std::vector<std::string> candidates;
    for (const auto& rule : default_ruleset()) {
      if (rule.complexity != slot.complexity) continue;
      if (!enumerate_sites(n, view, rule.id).empty()) candidates.push_back(rule.id);
    }
    if (static_cast<int>(candidates.size()) < slot.count)
      throw Error("insufficient-sites",
                  std::string("not enough applicable ") + to_string(slot.complexity) +
                      " rules: need " + std::to_string(slot.count) + ", have " +
                      std::to_string(candidates.size()));
    rng.shuffle(candidates);
    chosen.insert(chosen.end(), candidates.begin(), candidates.begin() + slot.count);
  }

  // Assign sites on distinct lines so the mutations compose. Rules with the
  // fewest sites pick first so a flexible rule cannot starve a scarce one.
  std::vector<std::string> lines = view.lines;
  std::vector<int> removed;
  std::set<int> used_lines;
  struct Planned {
    std::string rule;
    Site site;
  };
  std::sort(chosen.begin(), chosen.end(), [&](const std::string& a, const std::string& b) {
    std::size_t sa = enumerate_sites(n, view, a).size();
    std::size_t sb = enumerate_sites(n, view, b).size();
    if (sa != sb) return sa < sb;
    return a < b;
  });
  std::vector<Planned> planned;
  for (const auto& rule : chosen) {
    auto sites = enumerate_sites(n, view, rule);
    std::vector<Site> free;
    for (auto& s : sites)
      if (!used_lines.count(s.line_idx)) free.push_back(s);
    if (free.empty())
      throw Error("insufficient-sites", "no free injection site left for rule '" + rule + "'");
    Site pick = free[rng.next_below(free.size())];
    used_lines.insert(pick.line_idx);
    planned.push_back({rule, std::move(pick)});
  }

  // Apply all mutations, then resolve truth lines against the final layout.
  for (auto& p : planned) p.site.apply(lines, removed, rng);

  InjectionResult result;
  result.text = emit(lines, removed);
  result.record.kind = InjectionKind::Bugs;
  for (const auto& p : planned) {
    int truth_line;
    if (p.site.anchor_kind == 1) {
      truth_line = static_cast<int>(lines.size()) - static_cast<int>(removed.size());
    } else {
      int anchor = p.site.anchor_kind == 2 ? p.site.anchor_idx : p.site.line_idx;
      truth_line = final_index(anchor, removed) + 1;
    }
    result.record.bug_truth.push_back({p.rule, truth_line});
  }
  std::sort(result.record.bug_truth.begin(), result.record.bug_truth.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second < b.second : a.first < b.first;
            });
  return result;
}

namespace {

std::string fresh_node(const std::set<std::string>& taken, const std::string& stem) {
  for (int i = 1;; ++i) {
    std::string cand = stem + std::to_string(i);
    if (!taken.count(cand)) return cand;
  }
}

int max_name_index(const Netlist& n, char prefix) {
  int best = 0;
  for (const auto& e : n.elements) {
    if (e.name.empty() ||
        std::toupper(static_cast<unsigned char>(e.name[0])) != prefix)
      continue;
    std::string digits = e.name.substr(1);
    if (digits.empty() || !detail::is_number(digits)) continue;
    best = std::max(best, std::stoi(digits));
  }
  return best;
}

}  // namespace

TrojanTemplate trigger_template() {
  TrojanTemplate t;
  auto fet = [](const std::string& name, const std::string& d, const std::string& g,
                const std::string& s, const std::string& b, const std::string& model,
                const char* w, const char* l) {
    Element e;
    e.kind = ElementKind::Mosfet;
    e.name = name;
    e.nodes = {d, g, s, b};
    e.model = model;
    e.params["W"] = *PhysicalValue::parse(w);
    e.params["L"] = *PhysicalValue::parse(l);
    return e;
  };
  t.components.push_back(fet("@M1", t.cap_node, t.trigger_in, t.vdd, t.vdd, "PMOS", "0.4u", "0.18u"));
  t.components.push_back(fet("@M2", t.cap_node, t.trigger_in, t.gnd, t.gnd, "NMOS", "0.2u", "0.18u"));
  t.components.push_back(fet("@M3", t.cap_node, t.cap_node, t.gnd, t.gnd, "NMOS", "0.1u", "0.9u"));
  t.components.push_back(fet("@M4", t.det_node, t.cap_node, t.vdd, t.vdd, "PMOS", "0.4u", "0.18u"));
  t.components.push_back(fet("@M5", t.det_node, t.cap_node, t.gnd, t.gnd, "NMOS", "0.2u", "0.18u"));
  Element cap;
  cap.kind = ElementKind::Capacitor;
  cap.name = "@C1";
  cap.nodes = {t.cap_node, t.gnd};
  cap.value = *PhysicalValue::parse("10f");
  t.components.push_back(cap);
  t.components.push_back(fet("@M6", t.payload_out, t.det_node, t.gnd, t.gnd, "NMOS", "0.6u", "0.18u"));
  return t;
}

std::string choose_trigger_node(const Netlist& n, const std::string& payload_node) {
  auto g = connectivity_graph(n);
  std::string out, in;
  try {
    out = resolve_output_node(n);
  } catch (const Error&) {
  }
  in = resolve_input_node(n);
  for (const auto& node : n.node_names()) {
    if (node == payload_node || node == "0" || node == out || node == in) continue;
    std::string l = to_lower(node);
    if (l == "vdd" || l == "vcc" || l == "vdd!") continue;
    if (g.is_rail(node, n.elements.size())) continue;
    return node;
  }
  throw Error("node-not-found", "no eligible trigger node besides '" + payload_node + "'");
}

InjectionResult inject_trojan(const Netlist& n, const std::string& payload_node,
                              const std::string& trigger_node, std::uint64_t seed) {
  auto nodes = n.node_names();
  if (!nodes.count(payload_node))
    throw Error("node-not-found", "payload node '" + payload_node + "' is not in the netlist");
  if (!nodes.count(trigger_node))
    throw Error("node-not-found", "trigger node '" + trigger_node + "' is not in the netlist");
  if (payload_node == "0" || trigger_node == "0")
    throw Error("ground-target", "trojan cannot target the ground node");

  // Supply rail: a vdd-ish name if present, else the highest-degree non-ground node.
  std::string vdd;
  for (const auto& node : nodes) {
    std::string l = to_lower(node);
    if (l == "vdd" || l == "vcc" || l == "vdd!") {
      vdd = node;
      break;
    }
  }
  if (vdd.empty()) {
    auto g = connectivity_graph(n);
    int best = -1;
    for (const auto& [node, deg] : g.degree) {
      if (node == "0" || node == payload_node) continue;
      if (deg > best) {
        best = deg;
        vdd = node;
      }
    }
    if (vdd.empty()) throw Error("node-not-found", "no usable supply node");
  }

  std::string cap_node = fresh_node(nodes, "tc");
  std::set<std::string> taken = nodes;
  taken.insert(cap_node);
  std::string det_node = fresh_node(taken, "td");

  int m_base = max_name_index(n, 'M');
  int c_base = max_name_index(n, 'C');

  TrojanTemplate tmpl = trigger_template();
  std::map<std::string, std::string> subst = {{tmpl.cap_node, cap_node},
                                              {tmpl.det_node, det_node},
                                              {tmpl.trigger_in, trigger_node},
                                              {tmpl.payload_out, payload_node},
                                              {tmpl.vdd, vdd}};
  std::set<std::string> planted_names;
  std::vector<std::string> block;
  for (auto e : tmpl.components) {
    if (e.kind == ElementKind::Mosfet) e.name = "M" + std::to_string(++m_base);
    else e.name = "C" + std::to_string(++c_base);
    planted_names.insert(e.name);
    for (auto& node : e.nodes) {
      auto it = subst.find(node);
      if (it != subst.end()) node = it->second;
    }
    std::string line = e.name;
    for (const auto& node : e.nodes) line += " " + node;
    if (e.model) line += " " + *e.model;
    if (e.value) line += " " + e.value->raw;
    for (const auto& [k, v] : e.params) line += " " + k + "=" + v.raw;
    block.push_back(line);
  }
  (void)seed;

  // Insert the block before .END (or at EOF when unterminated).
  std::vector<std::string> lines;
  for (const auto& sl : n.source_lines) lines.push_back(sl.text);
  int insert_at = static_cast<int>(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto toks = split_ws(trim(lines[i]));
    if (!toks.empty() && iequals(toks[0], ".END")) {
      insert_at = static_cast<int>(i);
      break;
    }
  }
  lines.insert(lines.begin() + insert_at, block.begin(), block.end());

  std::string circuit = "circuit";
  {
    auto title_toks = split_ws(trim(n.title));
    if (!title_toks.empty()) circuit = title_toks[0];
  }

  InjectionResult result;
  for (const auto& l : lines) {
    result.text += l;
    result.text += '\n';
  }
  result.record.kind = InjectionKind::Trojan;
  result.record.trojan_components = planted_names;
  result.record.impacted_nodes = {trigger_node, cap_node, payload_node};
  result.record.cap_node = cap_node;
  result.record.label = circuit + "_troj_" + payload_node;
  return result;
}

InjectionResult scramble(const std::string& trojan_text, const InjectionRecord& record,
                         std::uint64_t seed) {
  auto parsed = parse_netlist(trojan_text);
  Netlist n = std::move(parsed.netlist);
  Rng rng(detail::mix(seed, 0x5ca3ab1eULL));

  rng.shuffle(n.elements);

  // Internal trojan nodes: used by trojan components only.
  std::set<std::string> host_nodes;
  for (const auto& e : n.elements) {
    if (record.trojan_components.count(e.name)) continue;
    for (const auto& node : e.nodes) host_nodes.insert(node);
  }
  std::set<std::string> internal;
  for (const auto& e : n.elements) {
    if (!record.trojan_components.count(e.name)) continue;
    for (const auto& node : e.nodes)
      if (!host_nodes.count(node)) internal.insert(node);
  }

  std::set<std::string> all_nodes = n.node_names();
  std::map<std::string, std::string> node_rename;
  for (const auto& node : internal) {
    std::string fresh;
    do {
      fresh = std::to_string(100 + rng.next_below(900));
    } while (all_nodes.count(fresh));
    all_nodes.insert(fresh);
    node_rename[node] = fresh;
  }

  std::set<std::string> element_names;
  for (const auto& e : n.elements) element_names.insert(e.name);
  std::map<std::string, std::string> elem_rename;
  for (const auto& name : record.trojan_components) {
    char prefix = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    std::string fresh;
    do {
      fresh = std::string(1, prefix) + std::to_string(1 + rng.next_below(899));
    } while (element_names.count(fresh));
    element_names.insert(fresh);
    elem_rename[name] = fresh;
  }

  auto perturb = [&rng](PhysicalValue& v) {
    double factor = 0.5 + rng.next_real();  // [0.5, 1.5)
    v.magnitude *= factor;
    std::ostringstream mag;
    mag.precision(4);
    mag << v.magnitude;
    v.raw = mag.str() + v.suffix;
  };

  for (auto& e : n.elements) {
    bool trojan = record.trojan_components.count(e.name) > 0;
    if (trojan) {
      e.name = elem_rename.at(e.name);
      for (auto it = e.params.begin(); it != e.params.end(); ++it) {
        if (it->first == "W" || it->first == "L") perturb(it->second);
      }
      if (e.kind == ElementKind::Capacitor && e.value) perturb(*e.value);
    }
    for (auto& node : e.nodes) {
      auto it = node_rename.find(node);
      if (it != node_rename.end()) node = it->second;
    }
  }

  InjectionResult result;
  result.text = serialize_netlist(n);
  result.record = record;
  result.record.trojan_components.clear();
  for (const auto& [old_name, new_name] : elem_rename) result.record.trojan_components.insert(new_name);
  result.record.impacted_nodes.clear();
  for (const auto& node : record.impacted_nodes) {
    auto it = node_rename.find(node);
    result.record.impacted_nodes.insert(it == node_rename.end() ? node : it->second);
  }
  {
    auto it = node_rename.find(record.cap_node);
    if (it != node_rename.end()) result.record.cap_node = it->second;
  }
  return result;
}

std::string record_to_json(const InjectionRecord& rec) {
  json j;
  j["kind"] = rec.kind == InjectionKind::Bugs ? "bugs" : "trojan";
  j["label"] = rec.label;
  j["bug_truth"] = json::array();
  for (const auto& [rule, line] : rec.bug_truth)
    j["bug_truth"].push_back({{"rule_id", rule}, {"line", line}});
  j["trojan_components"] = json::array();
  for (const auto& c : rec.trojan_components) j["trojan_components"].push_back(c);
  j["impacted_nodes"] = json::array();
  for (const auto& node : rec.impacted_nodes) j["impacted_nodes"].push_back(node);
  j["cap_node"] = rec.cap_node;
  return j.dump(2) + "\n";
}

InjectionRecord record_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  InjectionRecord rec;
  rec.kind = j.value("kind", "bugs") == "trojan" ? InjectionKind::Trojan : InjectionKind::Bugs;
  rec.label = j.value("label", "");
  if (j.contains("bug_truth"))
    for (const auto& b : j.at("bug_truth"))
      rec.bug_truth.push_back({b.at("rule_id").get<std::string>(), b.at("line").get<int>()});
  if (j.contains("trojan_components"))
    for (const auto& c : j.at("trojan_components")) rec.trojan_components.insert(c.get<std::string>());
  if (j.contains("impacted_nodes"))
    for (const auto& node : j.at("impacted_nodes")) rec.impacted_nodes.insert(node.get<std::string>());
  rec.cap_node = j.value("cap_node", "");
  return rec;
}

}  // namespace spicecheck
