#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spicecheck/lint.hpp"
#include "spicecheck/netlist.hpp"

namespace spicecheck {

struct BugPlan {
  int easy = 0;
  int medium = 0;
  int difficult = 0;
  std::uint64_t seed = 0;
};

enum class InjectionKind { Bugs, Trojan };

struct InjectionRecord {
  InjectionKind kind = InjectionKind::Bugs;
  std::vector<std::pair<std::string, int>> bug_truth;  // (rule_id, line_no)
  std::set<std::string> trojan_components;
  std::set<std::string> impacted_nodes;  // trigger tap, internal cap node, payload
  std::string label;                     // "<netlist>_troj_<payload node>"
  std::string cap_node;                  // internal charge-storage node
};

struct InjectionResult {
  std::string text;
  InjectionRecord record;
};

// Seeds `plan` bugs into a lint-clean netlist, one distinct rule per slot.
InjectionResult inject_bugs(const Netlist& n, const BugPlan& plan);

// Targeted single-bug injection; used by inject_bugs and by fixtures.
InjectionResult inject_rule(const Netlist& n, const std::string& rule_id, std::uint64_t seed);

// Rule ids that have at least one applicable site in the netlist.
std::vector<std::string> applicable_rules(const Netlist& n);

// The planted block: a charge-pump pair driven from the trigger tap, a leak
// device, a detector inverter watching the storage node, the storage
// capacitor, and the payload switch. Components are wired with the
// placeholder port/node names below; instantiation substitutes host nodes and
// fresh names.
struct TrojanTemplate {
  std::vector<Element> components;  // exactly 7
  std::string cap_node = "@cap";
  std::string det_node = "@det";
  std::string trigger_in = "@trigger";
  std::string payload_out = "@payload";
  std::string vdd = "@vdd";
  std::string gnd = "0";
};

TrojanTemplate trigger_template();

// First non-rail intermediate node (sorted order) usable as the trigger tap.
std::string choose_trigger_node(const Netlist& n, const std::string& payload_node);

// Appends a seven-component charge-pump/detector/payload trigger template.
InjectionResult inject_trojan(const Netlist& n, const std::string& payload_node,
                              const std::string& trigger_node, std::uint64_t seed);

// Permutes element order, renames the planted components and their internal
// nodes to host-style names, and perturbs their W/L and capacitance within
// +-50%. Connectivity stays isomorphic.
InjectionResult scramble(const std::string& trojan_text, const InjectionRecord& record,
                         std::uint64_t seed);

std::string record_to_json(const InjectionRecord& rec);
InjectionRecord record_from_json(const std::string& json_text);

}  // namespace spicecheck
