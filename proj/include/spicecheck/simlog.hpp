#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spicecheck/inject.hpp"
#include "spicecheck/netlist.hpp"

namespace spicecheck {

struct SimulationLog {
  std::vector<double> inputs;  // strictly increasing sweep values
  std::map<std::string, std::vector<double>> node_voltages;
  std::map<std::string, std::vector<double>> device_currents;
  std::string output_node;

  std::size_t samples() const { return inputs.size(); }
};

struct CircuitSpec {
  double v_out_min = 0.9;
  double v_out_max = 1.1;
};

struct Sweep {
  double v_lo = 0.0;
  double v_hi = 1.8;
  double step = 0.05;
};

// Parameters of the synthetic anomaly overlay. Inside the half-open input
// window the output violates its spec, the recorded nodes shift, and the
// trigger-side devices draw surged current; outside it the log is bit-equal
// to the clean one generated with the same seed.
struct BehaviorModel {
  double window_lo = 0.8;
  double window_hi = 1.0;
  double out_violation = 0.3;        // volts above v_out_max
  double node_deviation = 0.08;      // volts added to impacted nodes
  double current_surge_factor = 8.0; // >= 1
  double noise_sigma = 0.0;          // voltage jitter
  std::uint64_t seed = 0;
};

SimulationLog parse_log(const std::string& text);
std::string write_log(const SimulationLog& log);

SimulationLog gen_log(const Netlist& n, const InjectionRecord* rec, const BehaviorModel& model,
                      const Sweep& sweep, const CircuitSpec& spec);

}  // namespace spicecheck
