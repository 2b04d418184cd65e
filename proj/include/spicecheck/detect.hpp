#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "spicecheck/netlist.hpp"
#include "spicecheck/simlog.hpp"

namespace spicecheck {

struct InputPartition {
  std::vector<int> activation;  // sample indices where the output violates spec
  std::vector<int> normal;      // complement; both sorted ascending
};

enum class CombineMode { Union, Intersection };

struct DetectConfig {
  CombineMode combine_mode = CombineMode::Union;
  double dev_rel_threshold = 3.0;
  double dev_abs_floor = 0.05;       // volts
  double current_rel_threshold = 5.0;
  double current_abs_floor = 1e-6;   // amperes
};

struct NodeDeviationStats {
  double activation_max = 0.0;  // max |dV| over steps adjoining an activation sample
  double normal_max = 0.0;      // max |dV| over steps between normal samples
};

struct Rule2Result {
  std::set<std::string> set_a;   // significant activation-vs-normal deviation
  std::set<std::string> set_b;   // per-activation-sample argmax nodes
  std::set<std::string> combined;
  std::map<std::string, NodeDeviationStats> stats;
};

struct DeviceCurrentStats {
  double activation_max = 0.0;
  double normal_max = 0.0;
};

struct Rule3Result {
  std::set<std::string> devices;  // flagged MOSFETs
  std::set<std::string> nodes;    // their drain/gate/source terminals, rails excluded
  std::map<std::string, DeviceCurrentStats> stats;
};

struct DetectionReport {
  bool trojan_detected = false;
  std::set<std::string> suspect_components;
  std::set<std::string> suspect_nodes;
  InputPartition partition;
  Rule2Result rule2;
  Rule3Result rule3;
  CombineMode mode = CombineMode::Union;
  std::vector<std::string> warnings;
};

InputPartition classify_inputs(const SimulationLog& log, const CircuitSpec& spec);

// First differences of a node's voltage: element j = V[j+1] - V[j].
std::vector<double> deviation_series(const SimulationLog& log, const std::string& node);

// Scans every intermediate node (all logged voltage columns except the
// output); the candidate overload restricts the scan to exactly that list.
Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg);
Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg, const std::vector<std::string>& candidates);

Rule3Result rule3_nodes(const SimulationLog& log, const Netlist& n, const InputPartition& part,
                        const DetectConfig& cfg);

DetectionReport detect(const Netlist& n, const SimulationLog& log, const CircuitSpec& spec,
                       const DetectConfig& cfg);

std::string detection_to_json(const DetectionReport& report);

// Serial brute-force recomputation, implemented independently of the kernels
// above; used by tests and by the kernel benchmark.
namespace reference {

std::vector<double> deviation_series(const SimulationLog& log, const std::string& node);

Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg);
Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg, const std::vector<std::string>& candidates);

Rule3Result rule3_nodes(const SimulationLog& log, const Netlist& n, const InputPartition& part,
                        const DetectConfig& cfg);

}  // namespace reference

}  // namespace spicecheck
