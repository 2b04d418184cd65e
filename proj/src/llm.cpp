#include "spicecheck/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "json.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include "httplib.h"

namespace spicecheck {

using detail::iequals;
using detail::split_ws;
using detail::to_lower;
using detail::trim;
using json = nlohmann::ordered_json;

int estimate_tokens(const std::string& text) {
  return static_cast<int>((text.size() + 3) / 4);
}

namespace {

std::string numbered(const std::string& text) {
  std::ostringstream out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << ++no << " | " << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string build_lint_prompt(const Ruleset& rules, const std::string& netlist_text) {
  if (rules.empty()) throw Error("empty-input", "lint prompt needs a nonempty ruleset");
  std::ostringstream out;
  out << "You review SPICE netlists for syntax bugs. Apply exactly the rules below;\n"
         "flag nothing else.\n\nSyntax rules:\n";
  int no = 0;
  for (const auto& r : rules) {
    out << ++no << ". (" << to_string(r.complexity) << ") " << r.id << ": " << r.description
        << "\n";
    for (const auto& e : r.exceptions)
      out << "   exception: never flag a line with token shape [" << e << "]\n";
  }
  out << "\nNetlist under review (1-based line numbers):\n";
  out << numbered(netlist_text);
  out << "\nReport every bug as one numbered item:\n"
         "  <n>. Line <line>: <rule id> - <what is wrong>. Fix: <corrective action>.\n"
         "List the bugs in line order, then finish with a line 'Total bugs: <count>'.\n"
         "If the netlist is clean, answer exactly 'No bugs found.'\n";
  return out.str();
}

std::string PromptBundle::render() const {
  std::ostringstream out;
  out << system;
  int no = 0;
  for (const auto& ex : examples) {
    out << "\nExample " << ++no << " (label: " << ex.label << ")\nnetlist:\n"
        << ex.netlist_text;
    if (!ex.netlist_text.empty() && ex.netlist_text.back() != '\n') out << '\n';
    out << "log:\n" << ex.log_excerpt;
    if (!ex.log_excerpt.empty() && ex.log_excerpt.back() != '\n') out << '\n';
    out << "why: " << ex.explanation << '\n';
  }
  out << query;
  std::string rendered = out.str();
  int measured = estimate_tokens(rendered);
  if (measured > token_budget)
    throw Error("budget-exceeded", "prompt needs " + std::to_string(measured) +
                                       " tokens, budget is " + std::to_string(token_budget));
  return rendered;
}

std::string build_trojan_prompt(const DetectConfig& cfg,
                                const std::vector<FewShotExample>& examples,
                                const std::string& netlist_text, const std::string& log_excerpt,
                                const CircuitSpec& spec, int token_budget) {
  if (!examples.empty()) {
    bool has_trojan = false, has_clean = false;
    for (const auto& ex : examples) {
      if (iequals(ex.label, "Trojan")) has_trojan = true;
      if (iequals(ex.label, "Trojan-Free")) has_clean = true;
    }
    if (!has_trojan || !has_clean)
      throw Error("bad-examples", "few-shot examples need at least one of each label");
  }

  std::ostringstream out;
  out << "You analyze analog SPICE netlists and their DC sweep logs for planted\n"
         "trigger circuitry. Work step by step through the rules below and show the\n"
         "intermediate sets before the final answer.\n\n";
  out << "Rule 1 (input labeling): the output voltage specification is ["
      << spec.v_out_min << ", " << spec.v_out_max << "] V. Compare v(out) of every sweep\n"
         "sample against it. Samples where the output leaves the specification are\n"
         "'Trojan-Activation Inputs'; the remaining samples are 'Normal Inputs'.\n\n";
  out << "Rule 2 (node deviations): the deviation of node x at sample i is\n"
         "v_i(x) - v_{i-1}(x), the difference between consecutive sweep samples.\n"
         "Collect (a) nodes whose deviation next to Trojan-Activation Inputs is far\n"
         "above their deviation across Normal Inputs, and (b) for each\n"
         "Trojan-Activation Input the node with the largest absolute deviation.\n";
  if (cfg.combine_mode == CombineMode::Union) {
    out << "Combine them as the union of the nodes from (a) and (b).\n\n";
  } else {
    out << "Combine them as the intersection of the nodes from (a) and (b).\n\n";
  }
  out << "Rule 3 (current spikes): flag MOSFETs whose current under\n"
         "Trojan-Activation Inputs spikes far above their Normal-Input baseline. The\n"
         "drain, gate and source nodes of flagged devices are suspects; ignore\n"
         "supply rails and ground.\n\n";
  out << "The final impacted-node set is the Rule 2 result joined with the Rule 3\n"
         "suspects; the suspect components are the flagged devices plus elements\n"
         "wired entirely inside the impacted set.\n";

  PromptBundle bundle;
  bundle.system = out.str();
  bundle.examples = examples;
  bundle.token_budget = token_budget;

  std::ostringstream query;
  query << "\nTest case\nnetlist:\n" << netlist_text;
  if (!netlist_text.empty() && netlist_text.back() != '\n') query << '\n';
  query << "log:\n" << log_excerpt;
  if (!log_excerpt.empty() && log_excerpt.back() != '\n') query << '\n';
  query << "\nAnswer with either 'Trojan detected.' or 'No Trojan found.' If detected,\n"
           "add the lines 'Impacted nodes: <comma-separated nodes>' and\n"
           "'Components: <comma-separated element names>'.\n";
  bundle.query = query.str();
  return bundle.render();
}

namespace {

// keyword fragments -> rule id, checked in order
const std::vector<std::pair<std::string, std::string>>& rule_keywords() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"missing node", "missing-transistor-node"},
      {"missing .end statement", "missing-end-statement"},
      {"without .end", "missing-end-statement"},
      {"missing model", "missing-transistor-model"},
      {"model undefined", "missing-transistor-model"},
      {"floating", "floating-node"},
      {"extra node", "extra-transistor-node"},
      {"resistor value", "incorrect-resistor-value-format"},
      {"subcircuit", "incorrect-subckt-definition"},
      {"capacitor value", "missing-capacitor-value"},
      {"transient", "incorrect-tran-usage"},
      {"voltage value", "missing-voltage-value"},
      {"special character", "special-char-node-name"},
      {".print", "incorrect-print-statement"},
      {"current source", "incorrect-current-source"},
      {"transistor name", "incorrect-transistor-name"},
      {"unknown model", "incorrect-transistor-name"},
      {".ends", "missing-ends"},
      {"param", "incorrect-param-definition"},
      {".option", "incorrect-options-directive"},
      {".dc", "missing-dc-value"},
  };
  return table;
}

std::optional<int> line_number_after(const std::string& lower, std::size_t pos) {
  std::size_t i = pos;
  while (i < lower.size() && !std::isdigit(static_cast<unsigned char>(lower[i]))) {
    if (std::isalpha(static_cast<unsigned char>(lower[i]))) return std::nullopt;
    ++i;
  }
  if (i >= lower.size()) return std::nullopt;
  int value = 0;
  while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) {
    value = value * 10 + (lower[i] - '0');
    ++i;
  }
  return value;
}

}  // namespace

ParsedBugResponse parse_bug_response(const std::string& text) {
  ParsedBugResponse out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    std::string lower = to_lower(t);
    auto pos = lower.find("line");
    std::optional<int> line_no;
    if (pos != std::string::npos) line_no = line_number_after(lower, pos + 4);
    if (!line_no.has_value()) {
      out.residue.push_back(t);
      continue;
    }
    LintFinding f;
    f.line_no = *line_no;
    f.rule_id = "unknown";
    for (const auto& rule : default_ruleset())
      if (lower.find(rule.id) != std::string::npos) f.rule_id = rule.id;
    if (f.rule_id == "unknown") {
      for (const auto& [kw, id] : rule_keywords()) {
        if (lower.find(kw) != std::string::npos) {
          f.rule_id = id;
          break;
        }
      }
    }
    f.message = t;
    auto fix_pos = lower.find("fix:");
    if (fix_pos == std::string::npos) fix_pos = lower.find("suggestion:");
    if (fix_pos != std::string::npos) {
      std::string rest = trim(t.substr(t.find(':', fix_pos) + 1));
      if (!rest.empty()) {
        FixSuggestion s;
        std::string rl = to_lower(rest);
        if (rl.rfind("replace", 0) == 0) s.action = FixAction::ReplaceToken;
        else if (rl.rfind("insert", 0) == 0) s.action = FixAction::InsertToken;
        else if (rl.rfind("delete", 0) == 0 || rl.rfind("remove", 0) == 0)
          s.action = FixAction::DeleteToken;
        else if (rl.rfind("append", 0) == 0 || rl.rfind("add", 0) == 0)
          s.action = FixAction::AppendLine;
        else s.action = FixAction::ReplaceToken;
        s.payload = rest;
        f.suggestion = s;
      }
    }
    out.findings.push_back(std::move(f));
  }
  return out;
}

ParsedTrojanResponse parse_trojan_response(const std::string& text,
                                           const std::set<std::string>& known_nodes) {
  ParsedTrojanResponse out;
  std::istringstream in(text);
  std::string line;
  auto split_list = [](const std::string& s) {
    std::vector<std::string> items;
    std::string cur;
    for (char c : s) {
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '!') {
        cur += c;
      } else {
        if (!cur.empty()) items.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) items.push_back(cur);
    std::vector<std::string> kept;
    for (auto& it : items)
      if (!iequals(it, "and") && !iequals(it, "node") && !iequals(it, "nodes")) kept.push_back(it);
    return kept;
  };

  bool verdict_seen = false;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    std::string lower = to_lower(t);
    bool consumed = false;

    if (lower.find("no trojan") != std::string::npos ||
        lower.find("trojan-free") != std::string::npos ||
        lower.find("trojan free") != std::string::npos) {
      out.trojan_detected = false;
      verdict_seen = true;
      consumed = true;
    } else if (lower.find("trojan") != std::string::npos &&
               (lower.find("detect") != std::string::npos ||
                lower.find("found") != std::string::npos ||
                lower.find("present") != std::string::npos ||
                lower.find("inserted") != std::string::npos)) {
      out.trojan_detected = true;
      verdict_seen = true;
      consumed = true;
    }

    auto node_pos = lower.find("node");
    if (node_pos != std::string::npos) {
      auto colonish = t.find_first_of(":", node_pos);
      std::string rest = colonish == std::string::npos
                             ? t.substr(node_pos + 5 <= t.size() ? node_pos + 5 : t.size())
                             : t.substr(colonish + 1);
      for (const auto& tok : split_list(rest)) {
        if (known_nodes.count(tok)) {
          out.suspect_nodes.insert(tok);
          consumed = true;
        } else {
          out.residue.push_back("unknown node '" + tok + "'");
        }
      }
    }
    auto comp_pos = lower.find("component");
    if (comp_pos != std::string::npos) {
      auto colonish = t.find_first_of(":", comp_pos);
      if (colonish != std::string::npos) {
        for (const auto& tok : split_list(t.substr(colonish + 1))) {
          if (!tok.empty() && std::isalpha(static_cast<unsigned char>(tok[0]))) {
            out.suspect_components.insert(tok);
            consumed = true;
          } else {
            out.residue.push_back("unknown component '" + tok + "'");
          }
        }
      }
    }
    if (!consumed) out.residue.push_back(t);
  }
  if (verdict_seen && !out.trojan_detected) {
    out.suspect_nodes.clear();
    out.suspect_components.clear();
  }
  return out;
}

std::string render_detection_summary(const DetectionReport& report) {
  if (!report.trojan_detected) return "No Trojan found.\n";
  std::ostringstream out;
  out << "Trojan detected.\n";
  out << "Impacted nodes:";
  bool first = true;
  for (const auto& node : report.suspect_nodes) {
    out << (first ? " " : ", ") << node;
    first = false;
  }
  out << "\nComponents:";
  first = true;
  for (const auto& c : report.suspect_components) {
    out << (first ? " " : ", ") << c;
    first = false;
  }
  out << "\n";
  return out.str();
}

std::string complete(const std::string& prompt, const EndpointConfig& cfg) {
  const char* key = cfg.api_key_env.empty() ? nullptr : std::getenv(cfg.api_key_env.c_str());
  if (!key || !*key)
    throw Error("missing-key", "environment variable '" + cfg.api_key_env + "' is not set");

  // base_url may carry a path prefix (http://host:port/prefix)
  std::string host = cfg.base_url, prefix;
  auto scheme_pos = host.find("://");
  if (scheme_pos != std::string::npos) {
    auto path_pos = host.find('/', scheme_pos + 3);
    if (path_pos != std::string::npos) {
      prefix = host.substr(path_pos);
      host = host.substr(0, path_pos);
    }
  }
  httplib::Client client(host);
  client.set_connection_timeout(static_cast<int>(cfg.timeout_s), 0);
  client.set_read_timeout(static_cast<int>(cfg.timeout_s), 0);

  json body;
  body["model"] = cfg.model_name;
  body["temperature"] = cfg.temperature;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});

  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  auto res = client.Post(prefix + "/v1/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw Error("timeout", "no response from " + cfg.base_url);
  if (res->status != 200)
    throw Error("http-status", "endpoint returned status " + std::to_string(res->status));
  try {
    json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw Error("http-status", std::string("malformed completion payload: ") + e.what());
  }
}

std::string endpoint_config_to_json(const EndpointConfig& cfg) {
  json j;
  j["base_url"] = cfg.base_url;
  j["model_name"] = cfg.model_name;
  j["api_key_env"] = cfg.api_key_env;
  j["timeout_s"] = cfg.timeout_s;
  j["temperature"] = cfg.temperature;
  return j.dump(2) + "\n";
}

EndpointConfig endpoint_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  EndpointConfig cfg;
  cfg.base_url = j.value("base_url", "");
  cfg.model_name = j.value("model_name", cfg.model_name);
  cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
  cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
  cfg.temperature = j.value("temperature", cfg.temperature);
  return cfg;
}

}  // namespace spicecheck
