#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spicecheck/netlist.hpp"

namespace spicecheck {

enum class Complexity { Easy, Medium, Difficult };

const char* to_string(Complexity c);

enum class FixAction { InsertToken, ReplaceToken, DeleteToken, AppendLine, RenameIdentifier };

const char* to_string(FixAction a);

struct FixSuggestion {
  FixAction action = FixAction::ReplaceToken;
  std::string payload;
  // Positioning detail for the fix engine. token_index/span address tokens of
  // the cited line; for AppendLine, insert_after is a line number (0 = end of
  // file, before .END when present). RenameIdentifier renames `target` to
  // `payload` netlist-wide.
  int token_index = 0;
  int span = 1;
  int insert_after = 0;
  std::string target;
};

struct LintFinding {
  std::string rule_id;
  int line_no = 0;
  std::string element_or_card;  // element or card name, "" for whole-netlist findings
  std::string snippet;          // logical source line text
  std::string message;
  std::optional<FixSuggestion> suggestion;
};

struct BugReport {
  std::vector<LintFinding> findings;
  std::optional<std::string> corrected_text;
};

struct LintRule {
  std::string id;
  Complexity complexity = Complexity::Easy;
  std::string description;
  std::set<std::string> exceptions;  // token-shape patterns this rule must not flag
  bool enabled = true;
};

using Ruleset = std::vector<LintRule>;

// The 18 shipped rules: 4 easy, 6 medium, 8 difficult.
Ruleset default_ruleset();

const LintRule* find_rule(const Ruleset& rules, const std::string& id);

// Token-shape signature of a source line: element/directive structure kept,
// names and plain numbers wildcarded, value-suffix case preserved. This is
// the pattern refine_ruleset() records for false positives.
std::string token_shape(const std::string& line);

BugReport lint(const Netlist& n, const Ruleset& rules);

struct FixOutcome {
  std::string text;
  std::vector<std::string> conflicts;  // descriptions of fix pairs that were skipped
  int applied = 0;
};

FixOutcome apply_fixes(const std::string& text, const std::vector<LintFinding>& findings);

enum class Verdict { TruePositive, FalsePositive };

Ruleset refine_ruleset(const Ruleset& rules,
                       const std::vector<std::pair<LintFinding, Verdict>>& feedback);

std::string report_to_json(const BugReport& report, const Ruleset& rules);

std::string ruleset_to_json(const Ruleset& rules);
Ruleset ruleset_from_json(const std::string& json_text);

}  // namespace spicecheck
