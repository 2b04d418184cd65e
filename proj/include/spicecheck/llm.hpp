#pragma once

#include <set>
#include <string>
#include <vector>

#include "spicecheck/detect.hpp"
#include "spicecheck/lint.hpp"

namespace spicecheck {

struct FewShotExample {
  std::string label;  // "Trojan" or "Trojan-Free"
  std::string netlist_text;
  std::string log_excerpt;
  std::string explanation;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8089
  std::string model_name = "gpt-3.5-turbo";
  std::string api_key_env = "SPICECHECK_API_KEY";  // key read from env, never from files
  double timeout_s = 30.0;
  double temperature = 0.0;
};

inline constexpr int kDefaultTokenBudget = 16000;

// Rough token count used against the prompt budget: one token per 4 chars.
int estimate_tokens(const std::string& text);

// Assembled prompt: the rules section renders first, then the labeled
// examples, then the query. render() enforces the token budget.
struct PromptBundle {
  std::string system;
  std::vector<FewShotExample> examples;
  std::string query;
  int token_budget = kDefaultTokenBudget;

  std::string render() const;
};

std::string build_lint_prompt(const Ruleset& rules, const std::string& netlist_text);

std::string build_trojan_prompt(const DetectConfig& cfg,
                                const std::vector<FewShotExample>& examples,
                                const std::string& netlist_text, const std::string& log_excerpt,
                                const CircuitSpec& spec,
                                int token_budget = kDefaultTokenBudget);

struct ParsedBugResponse {
  std::vector<LintFinding> findings;
  std::vector<std::string> residue;  // informative lines/tokens not parsed into findings
};

ParsedBugResponse parse_bug_response(const std::string& text);

struct ParsedTrojanResponse {
  bool trojan_detected = false;
  std::set<std::string> suspect_nodes;
  std::set<std::string> suspect_components;
  std::vector<std::string> residue;
};

ParsedTrojanResponse parse_trojan_response(const std::string& text,
                                           const std::set<std::string>& known_nodes);

// One-line verdict summary whose wording parse_trojan_response understands.
std::string render_detection_summary(const DetectionReport& report);

// Blocking chat-completion call. Never used by tests except against the local
// stub server.
std::string complete(const std::string& prompt, const EndpointConfig& cfg);

std::string endpoint_config_to_json(const EndpointConfig& cfg);
EndpointConfig endpoint_config_from_json(const std::string& json_text);

}  // namespace spicecheck
