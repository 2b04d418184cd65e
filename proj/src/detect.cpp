#include "spicecheck/detect.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace spicecheck {

using json = nlohmann::ordered_json;

InputPartition classify_inputs(const SimulationLog& log, const CircuitSpec& spec) {
  InputPartition part;
  auto it = log.node_voltages.find(log.output_node);
  if (it == log.node_voltages.end())
    throw Error("unknown-node", "output node '" + log.output_node + "' has no voltage column");
  const auto& out = it->second;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < spec.v_out_min || out[i] > spec.v_out_max)
      part.activation.push_back(static_cast<int>(i));
    else
      part.normal.push_back(static_cast<int>(i));
  }
  return part;
}

std::vector<double> deviation_series(const SimulationLog& log, const std::string& node) {
  auto it = log.node_voltages.find(node);
  if (it == log.node_voltages.end())
    throw Error("unknown-node", "no voltage column for node '" + node + "'");
  const auto& v = it->second;
  if (v.size() < 2) throw Error("unknown-node", "need at least 2 samples for deviations");
  std::vector<double> out(v.size() - 1);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < static_cast<long long>(out.size()); ++j)
    out[j] = v[j + 1] - v[j];
  return out;
}

namespace {

std::vector<char> activation_mask(const InputPartition& part, std::size_t count) {
  std::vector<char> mask(count, 0);
  for (int i : part.activation)
    if (i >= 0 && static_cast<std::size_t>(i) < count) mask[i] = 1;
  return mask;
}

}  // namespace

Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg) {
  std::vector<std::string> nodes;
  for (const auto& [node, series] : log.node_voltages)
    if (node != log.output_node) nodes.push_back(node);
  return rule2_nodes(log, part, cfg, nodes);
}

Rule2Result rule2_nodes(const SimulationLog& log, const InputPartition& part,
                        const DetectConfig& cfg, const std::vector<std::string>& candidates) {
  Rule2Result result;
  if (part.activation.empty() || log.samples() < 2) return result;

  const std::vector<std::string>& nodes = candidates;
  const std::size_t count = log.samples();
  const std::size_t steps = count - 1;
  auto mask = activation_mask(part, count);

  // Per-node deviation extrema over activation-adjacent vs normal-only steps.
  std::vector<NodeDeviationStats> stats(nodes.size());
  std::vector<std::vector<double>> devs(nodes.size());
#pragma omp parallel for schedule(static)
  for (long long ni = 0; ni < static_cast<long long>(nodes.size()); ++ni) {
    const auto& v = log.node_voltages.at(nodes[ni]);
    auto& d = devs[ni];
    d.resize(steps);
    NodeDeviationStats s;
    for (std::size_t j = 0; j < steps; ++j) {
      d[j] = v[j + 1] - v[j];
      double mag = std::fabs(d[j]);
      if (mask[j] || mask[j + 1]) s.activation_max = std::max(s.activation_max, mag);
      else s.normal_max = std::max(s.normal_max, mag);
    }
    stats[ni] = s;
  }

  for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
    result.stats[nodes[ni]] = stats[ni];
    double threshold = std::max(cfg.dev_rel_threshold * stats[ni].normal_max, cfg.dev_abs_floor);
    if (stats[ni].activation_max >= threshold) result.set_a.insert(nodes[ni]);
  }

  // For every activation sample, the node(s) with the largest |deviation| on
  // the step leading into it; ties keep all tied nodes.
  for (int i : part.activation) {
    if (i <= 0 || static_cast<std::size_t>(i) > steps) continue;
    std::size_t j = static_cast<std::size_t>(i) - 1;
    double best = -1.0;
    for (std::size_t ni = 0; ni < nodes.size(); ++ni)
      best = std::max(best, std::fabs(devs[ni][j]));
    if (best < 0.0) continue;
    for (std::size_t ni = 0; ni < nodes.size(); ++ni)
      if (std::fabs(devs[ni][j]) == best) result.set_b.insert(nodes[ni]);
  }

  if (cfg.combine_mode == CombineMode::Union) {
    result.combined = result.set_a;
    result.combined.insert(result.set_b.begin(), result.set_b.end());
  } else {
    std::set_intersection(result.set_a.begin(), result.set_a.end(), result.set_b.begin(),
                          result.set_b.end(),
                          std::inserter(result.combined, result.combined.begin()));
  }
  return result;
}

Rule3Result rule3_nodes(const SimulationLog& log, const Netlist& n, const InputPartition& part,
                        const DetectConfig& cfg) {
  Rule3Result result;
  if (part.activation.empty() || log.device_currents.empty()) return result;

  std::map<std::string, const Element*> mosfets;
  for (const auto& e : n.elements)
    if (e.kind == ElementKind::Mosfet) mosfets[e.name] = &e;

  std::vector<std::string> devices;
  for (const auto& [dev, series] : log.device_currents)
    if (mosfets.count(dev)) devices.push_back(dev);

  const std::size_t count = log.samples();
  auto mask = activation_mask(part, count);

  std::vector<DeviceCurrentStats> stats(devices.size());
#pragma omp parallel for schedule(static)
  for (long long di = 0; di < static_cast<long long>(devices.size()); ++di) {
    const auto& series = log.device_currents.at(devices[di]);
    DeviceCurrentStats s;
    for (std::size_t i = 0; i < count && i < series.size(); ++i) {
      double mag = std::fabs(series[i]);
      if (mask[i]) s.activation_max = std::max(s.activation_max, mag);
      else s.normal_max = std::max(s.normal_max, mag);
    }
    stats[di] = s;
  }

  auto graph = connectivity_graph(n);
  for (std::size_t di = 0; di < devices.size(); ++di) {
    result.stats[devices[di]] = stats[di];
    double threshold =
        std::max(cfg.current_rel_threshold * stats[di].normal_max, cfg.current_abs_floor);
    if (stats[di].activation_max < threshold) continue;
    result.devices.insert(devices[di]);
    const Element* e = mosfets[devices[di]];
    for (std::size_t t = 0; t < e->nodes.size() && t < 3; ++t) {  // drain, gate, source
      const std::string& node = e->nodes[t];
      if (graph.is_rail(node, n.elements.size())) continue;
      result.nodes.insert(node);
    }
  }
  return result;
}

DetectionReport detect(const Netlist& n, const SimulationLog& log, const CircuitSpec& spec,
                       const DetectConfig& cfg) {
  DetectionReport report;
  report.mode = cfg.combine_mode;
  report.partition = classify_inputs(log, spec);
  if (report.partition.activation.empty()) return report;  // no violation, nothing to chase

  auto graph = connectivity_graph(n);
  auto netlist_nodes = n.node_names();

  std::vector<std::string> candidates;
  for (const auto& [node, series] : log.node_voltages) {
    if (node == log.output_node) continue;
    if (!netlist_nodes.count(node)) {
      report.warnings.push_back("log node '" + node + "' is not in the netlist; ignored");
      continue;
    }
    if (graph.is_rail(node, n.elements.size())) continue;
    candidates.push_back(node);
  }
  for (const auto& [dev, series] : log.device_currents) {
    bool known = false;
    for (const auto& e : n.elements)
      if (e.kind == ElementKind::Mosfet && e.name == dev) known = true;
    if (!known)
      report.warnings.push_back("log device '" + dev + "' is not in the netlist; ignored");
  }

  report.rule2 = rule2_nodes(log, report.partition, cfg, candidates);
  report.rule3 = rule3_nodes(log, n, report.partition, cfg);

  report.suspect_nodes = report.rule2.combined;
  report.suspect_nodes.insert(report.rule3.nodes.begin(), report.rule3.nodes.end());

  report.suspect_components = report.rule3.devices;
  for (const auto& e : n.elements) {
    bool touches = false, contained = true;
    for (const auto& node : e.nodes) {
      if (report.suspect_nodes.count(node)) {
        touches = true;
        continue;
      }
      if (graph.is_rail(node, n.elements.size())) continue;
      contained = false;
    }
    if (touches && contained) report.suspect_components.insert(e.name);
  }

  report.trojan_detected = !report.suspect_nodes.empty() || !report.suspect_components.empty();
  return report;
}

std::string detection_to_json(const DetectionReport& report) {
  json j;
  j["trojan_detected"] = report.trojan_detected;
  j["suspect_nodes"] = json::array();
  for (const auto& node : report.suspect_nodes) j["suspect_nodes"].push_back(node);
  j["suspect_components"] = json::array();
  for (const auto& c : report.suspect_components) j["suspect_components"].push_back(c);
  json evidence;
  evidence["activation_indices"] = report.partition.activation;
  json rule2;
  rule2["set_a"] = json::array();
  for (const auto& node : report.rule2.set_a) rule2["set_a"].push_back(node);
  rule2["set_b"] = json::array();
  for (const auto& node : report.rule2.set_b) rule2["set_b"].push_back(node);
  rule2["mode"] = report.mode == CombineMode::Union ? "union" : "intersection";
  evidence["rule2"] = rule2;
  json rule3;
  rule3["devices"] = json::array();
  for (const auto& d : report.rule3.devices) rule3["devices"].push_back(d);
  json ratios = json::object();
  for (const auto& [dev, s] : report.rule3.stats) {
    ratios[dev] = {{"activation_max", s.activation_max}, {"normal_max", s.normal_max}};
  }
  rule3["ratios"] = ratios;
  evidence["rule3"] = rule3;
  j["evidence"] = evidence;
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace spicecheck
