#include "spicecheck/simlog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace spicecheck {

using detail::fnv1a;
using detail::iequals;
using detail::mix;
using detail::split_ws;
using detail::to_lower;
using detail::trim;

SimulationLog parse_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_ws(line);
      break;
    }
  }
  if (header.empty()) throw Error("header-mismatch", "log has no header line");
  if (!iequals(header[0], "vin"))
    throw Error("header-mismatch", "first column must be 'vin', got '" + header[0] + "'");

  struct Column {
    bool voltage;
    std::string name;
  };
  std::vector<Column> columns;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string& h = header[i];
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(h[0])));
    bool probe = h.size() >= 4 && (c == 'v' || c == 'i') && h[1] == '(' && h.back() == ')';
    if (!probe)
      throw Error("header-mismatch", "column '" + h + "' is neither v(<node>) nor i(<device>)");
    columns.push_back({c == 'v', h.substr(2, h.size() - 3)});
  }

  SimulationLog log;
  for (const auto& col : columns) {
    if (col.voltage) log.node_voltages[col.name] = {};
    else log.device_currents[col.name] = {};
  }

  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto tokens = split_ws(line);
    if (tokens.size() != header.size())
      throw Error("ragged-row", "row " + std::to_string(row) + " has " +
                                    std::to_string(tokens.size()) + " columns, expected " +
                                    std::to_string(header.size()));
    std::vector<double> values;
    for (const auto& t : tokens) {
      try {
        std::size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        values.push_back(v);
      } catch (const std::exception&) {
        throw Error("ragged-row",
                    "row " + std::to_string(row) + ": token '" + t + "' is not a number");
      }
    }
    log.inputs.push_back(values[0]);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      auto& series = columns[i].voltage ? log.node_voltages[columns[i].name]
                                        : log.device_currents[columns[i].name];
      series.push_back(values[i + 1]);
    }
  }
  if (log.inputs.empty()) throw Error("ragged-row", "log has a header but no data rows");
  for (std::size_t i = 1; i < log.inputs.size(); ++i) {
    if (!(log.inputs[i] > log.inputs[i - 1]))
      throw Error("non-monotone-sweep", "vin is not strictly increasing at row " +
                                            std::to_string(i + 1));
  }

  if (log.node_voltages.count("out")) log.output_node = "out";
  else if (!columns.empty()) {
    for (const auto& col : columns) {
      if (col.voltage) {
        log.output_node = col.name;
        break;
      }
    }
  }
  return log;
}

std::string write_log(const SimulationLog& log) {
  std::ostringstream out;
  out << "vin";
  for (const auto& [node, series] : log.node_voltages) out << " v(" << node << ")";
  for (const auto& [dev, series] : log.device_currents) out << " i(" << dev << ")";
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < log.inputs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9e", log.inputs[i]);
    out << buf;
    for (const auto& [node, series] : log.node_voltages) {
      std::snprintf(buf, sizeof(buf), " %.9e", series[i]);
      out << buf;
    }
    for (const auto& [dev, series] : log.device_currents) {
      std::snprintf(buf, sizeof(buf), " %.9e", series[i]);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

namespace {

struct Response {
  double base, amp, center, width;
};

Response node_response(const std::string& node, std::uint64_t seed) {
  std::uint64_t h = mix(fnv1a(node), seed);
  auto unit = [&h]() {
    h = detail::splitmix64(h);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  Response r;
  r.base = 0.2 + unit() * 1.0;
  r.amp = 0.04 + unit() * 0.08;
  r.center = 0.4 + unit() * 1.0;
  r.width = 1.0 + unit() * 0.4;
  return r;
}

double sigmoid(double x) { return 0.5 * (1.0 + std::tanh(x)); }

}  // namespace

SimulationLog gen_log(const Netlist& n, const InjectionRecord* rec, const BehaviorModel& model,
                      const Sweep& sweep, const CircuitSpec& spec) {
  if (sweep.step <= 0.0 || sweep.v_hi < sweep.v_lo)
    throw Error("empty-sweep", "sweep needs step > 0 and v_hi >= v_lo");
  std::vector<double> vin;
  for (int i = 0;; ++i) {
    double v = sweep.v_lo + i * sweep.step;
    if (v > sweep.v_hi + sweep.step * 1e-9) break;
    vin.push_back(v);
  }
  if (vin.size() < 2) throw Error("empty-sweep", "sweep produces fewer than 2 samples");

  std::string output = resolve_output_node(n);
  std::string input = resolve_input_node(n);

  auto graph = connectivity_graph(n);
  if (rec) {
    auto nodes = n.node_names();
    for (const auto& node : rec->impacted_nodes)
      if (!nodes.count(node))
        throw Error("unknown-node", "impacted node '" + node + "' is not in the netlist");
  }

  SimulationLog log;
  log.inputs = vin;
  log.output_node = output;

  const std::size_t count = vin.size();
  std::vector<std::string> nodes;
  for (const auto& node : graph.nodes) {
    if (node == "0" || node == input) continue;
    nodes.push_back(node);
  }
  if (!graph.nodes.count(output)) nodes.push_back(output);
  for (const auto& node : nodes) log.node_voltages[node] = std::vector<double>(count, 0.0);

  std::vector<std::string> devices;
  for (const auto& e : n.elements)
    if (e.kind == ElementKind::Mosfet) devices.push_back(e.name);
  for (const auto& dev : devices) log.device_currents[dev] = std::vector<double>(count, 0.0);

  const double span = spec.v_out_max - spec.v_out_min;

#pragma omp parallel for schedule(static)
  for (long long ni = 0; ni < static_cast<long long>(nodes.size()); ++ni) {
    const std::string& node = nodes[ni];
    Response r = node_response(node, model.seed);
    auto& series = log.node_voltages.at(node);
    bool is_output = node == output;
    for (std::size_t i = 0; i < count; ++i) {
      double v;
      if (is_output) {
        v = spec.v_out_min + span * sigmoid((vin[i] - r.center) / r.width);
      } else {
        v = r.base + r.amp * sigmoid((vin[i] - r.center) / r.width);
      }
      if (model.noise_sigma > 0.0)
        v += model.noise_sigma *
             detail::hashed_gaussian(mix(mix(fnv1a(node), model.seed), i + 1));
      series[i] = v;
    }
  }

#pragma omp parallel for schedule(static)
  for (long long di = 0; di < static_cast<long long>(devices.size()); ++di) {
    const std::string& dev = devices[di];
    std::uint64_t h = mix(fnv1a(dev), mix(model.seed, 0x11));
    double c0 = 1e-4 + static_cast<double>(detail::splitmix64(h) >> 11) * 0x1.0p-53 * 9e-4;
    Response r = node_response(dev + ".i", model.seed);
    auto& series = log.device_currents.at(dev);
    for (std::size_t i = 0; i < count; ++i)
      series[i] = c0 * (1.0 + 0.05 * sigmoid((vin[i] - r.center) / r.width));
  }

  if (!rec) return log;

  // Window sample set.
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < count; ++i)
    if (vin[i] >= model.window_lo && vin[i] < model.window_hi) window.push_back(i);
  if (window.empty()) return log;
  const std::size_t wlen = window.size();

  // Output violation: a flat plateau above spec.
  {
    auto& series = log.node_voltages[output];
    for (std::size_t k = 0; k < wlen; ++k) series[window[k]] = spec.v_out_max + model.out_violation;
  }

  // Impacted nodes step up at the window entry and decay toward half the
  // deviation at its end, so the entry step carries the largest deviation and
  // every in-window step keeps a visible signature.
  for (const auto& node : rec->impacted_nodes) {
    if (node == output || !log.node_voltages.count(node)) continue;
    auto& series = log.node_voltages[node];
    for (std::size_t k = 0; k < wlen; ++k) {
      double decay = wlen > 1 ? 0.5 * static_cast<double>(k) / static_cast<double>(wlen - 1) : 0.0;
      series[window[k]] += model.node_deviation * (1.0 - decay);
    }
  }

  // Deviation couples at half amplitude into nodes adjacent through the host
  // circuit (edges contributed by non-planted elements).
  {
    std::vector<Element> host_elements;
    for (const auto& e : n.elements)
      if (!rec->trojan_components.count(e.name)) host_elements.push_back(e);
    NodeGraph host = connectivity_graph(host_elements);
    std::set<std::string> spill;
    for (const auto& node : rec->impacted_nodes)
      for (const auto& nb : host.neighbors(node)) spill.insert(nb);
    for (const auto& node : rec->impacted_nodes) spill.erase(node);
    spill.erase("0");
    for (const auto& node : spill) {
      if (node == output || node == input || !log.node_voltages.count(node)) continue;
      auto& series = log.node_voltages[node];
      for (std::size_t k = 0; k < wlen; ++k)
        series[window[k]] += 0.5 * model.node_deviation;
    }
  }

  // Current surge on the planted devices that sit entirely inside the
  // impacted/rail neighborhood (the charge-pump side of the template).
  for (const auto& e : n.elements) {
    if (e.kind != ElementKind::Mosfet || !rec->trojan_components.count(e.name)) continue;
    bool adjacent = true;
    bool touches = false;
    for (std::size_t t = 0; t < e.nodes.size() && t < 3; ++t) {
      const std::string& node = e.nodes[t];
      if (rec->impacted_nodes.count(node)) {
        touches = true;
        continue;
      }
      if (graph.is_rail(node, n.elements.size())) continue;
      adjacent = false;
    }
    if (!adjacent || !touches) continue;
    auto& series = log.device_currents[e.name];
    for (std::size_t k = 0; k < wlen; ++k) series[window[k]] *= model.current_surge_factor;
  }

  return log;
}

}  // namespace spicecheck
