// Naive serial recomputation of the detection kernels. Kept deliberately
// simple and independent: plain loops, membership tested by linear search,
// deviations recomputed on demand.
#include <cmath>

#include "spicecheck/detect.hpp"

namespace spicecheck::reference {

namespace {

bool contains(const std::vector<int>& v, int x) {
  for (int e : v)
    if (e == x) return true;
  return false;
}

}  // namespace

std::vector<double> deviation_series(const SimulationLog& log, const std::string& node) {
  auto it = log.node_voltages.find(node);
  if (it == log.node_voltages.end())
    throw Error("unknown-node", "no voltage column for node '" + node + "'");
  if (it->second.size() < 2) throw Error("unknown-node", "need at least 2 samples");
  std::vector<double> out;
  for (std::size_t i = 1; i < it->second.size(); ++i)
    out.push_back(it->second[i] - it->second[i - 1]);
  return out;
}

Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg) {
  std::vector<std::string> nodes;
  for (const auto& [node, series] : log.node_voltages)
    if (node != log.output_node) nodes.push_back(node);
  return reference::rule2_nodes(log, part, cfg, nodes);
}

Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg, const std::vector<std::string>& candidates) {
  Rule2Result result;
  if (part.activation.empty() || log.samples() < 2) return result;

  const std::vector<std::string>& nodes = candidates;

  for (const auto& node : nodes) {
    const auto& v = log.node_voltages.at(node);
    NodeDeviationStats s;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
      double mag = std::fabs(v[j + 1] - v[j]);
      bool act = contains(part.activation, static_cast<int>(j)) ||
                 contains(part.activation, static_cast<int>(j) + 1);
      if (act) {
        if (mag > s.activation_max) s.activation_max = mag;
      } else {
        if (mag > s.normal_max) s.normal_max = mag;
      }
    }
    result.stats[node] = s;
    double threshold = cfg.dev_rel_threshold * s.normal_max;
    if (threshold < cfg.dev_abs_floor) threshold = cfg.dev_abs_floor;
    if (s.activation_max >= threshold) result.set_a.insert(node);
  }

  for (int i : part.activation) {
    if (i <= 0 || static_cast<std::size_t>(i) >= log.samples()) continue;
    double best = -1.0;
    for (const auto& node : nodes) {
      const auto& v = log.node_voltages.at(node);
      double mag = std::fabs(v[i] - v[i - 1]);
      if (mag > best) best = mag;
    }
    if (best < 0.0) continue;
    for (const auto& node : nodes) {
      const auto& v = log.node_voltages.at(node);
      if (std::fabs(v[i] - v[i - 1]) == best) result.set_b.insert(node);
    }
  }

  if (cfg.combine_mode == CombineMode::Union) {
    for (const auto& node : result.set_a) result.combined.insert(node);
    for (const auto& node : result.set_b) result.combined.insert(node);
  } else {
    for (const auto& node : result.set_a)
      if (result.set_b.count(node)) result.combined.insert(node);
  }
  return result;
}

Rule3Result rule3_nodes(const SimulationLog& log, const Netlist& n, const InputPartition& part,
                        const DetectConfig& cfg) {
  Rule3Result result;
  if (part.activation.empty() || log.device_currents.empty()) return result;

  auto graph = connectivity_graph(n);
  for (const auto& e : n.elements) {
    if (e.kind != ElementKind::Mosfet) continue;
    auto it = log.device_currents.find(e.name);
    if (it == log.device_currents.end()) continue;
    DeviceCurrentStats s;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      double mag = std::fabs(it->second[i]);
      if (contains(part.activation, static_cast<int>(i))) {
        if (mag > s.activation_max) s.activation_max = mag;
      } else {
        if (mag > s.normal_max) s.normal_max = mag;
      }
    }
    result.stats[e.name] = s;
    double threshold = cfg.current_rel_threshold * s.normal_max;
    if (threshold < cfg.current_abs_floor) threshold = cfg.current_abs_floor;
    if (s.activation_max < threshold) continue;
    result.devices.insert(e.name);
    for (std::size_t t = 0; t < e.nodes.size() && t < 3; ++t) {
      if (graph.is_rail(e.nodes[t], n.elements.size())) continue;
      result.nodes.insert(e.nodes[t]);
    }
  }
  return result;
}

}  // namespace spicecheck::reference
