#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "spicecheck/inject.hpp"
#include "spicecheck/simlog.hpp"

using namespace spicecheck;

TEST_CASE("minimal two-column log") {
  auto log = parse_log("vin v(out)\n0.0 1.0\n0.1 1.01\n0.2 1.02\n");
  CHECK(log.samples() == 3);
  CHECK(log.node_voltages.size() == 1);
  CHECK(log.node_voltages.count("out") == 1);
  CHECK(log.output_node == "out");
}

TEST_CASE("numeric node and device columns keep their names") {
  auto log = parse_log("vin v(37) i(M5)\n0.0 0.5 1e-4\n0.1 0.6 1.1e-4\n");
  CHECK(log.node_voltages.count("37") == 1);
  CHECK(log.device_currents.count("M5") == 1);
  CHECK(log.output_node == "37");  // no out column, first node wins
}

TEST_CASE("ragged rows carry the row index") {
  CHECK_THROWS_CONTAINING(parse_log("vin v(out)\n0.0 1.0\n0.1\n"), "row 2");
  CHECK_THROWS_CONTAINING(parse_log("vin v(out)\n0.0 abc\n"), "abc");
}

TEST_CASE("non-monotone sweep is rejected") {
  try {
    parse_log("vin v(out)\n0.2 1.0\n0.1 1.0\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "non-monotone-sweep");
  }
}

TEST_CASE("header variants are validated") {
  CHECK_THROWS_AS(parse_log("time v(out)\n0 1\n"), Error);
  CHECK_THROWS_AS(parse_log("vin volts\n0 1\n"), Error);
  CHECK_THROWS_AS(parse_log(""), Error);
}

TEST_CASE("write then parse round trips within 1e-9 relative") {
  auto n = testutil::parse_fixture("bench/642.sp");
  BehaviorModel model;
  model.seed = 4;
  model.noise_sigma = 0.002;
  auto log = gen_log(n, nullptr, model, Sweep{0, 1.8, 0.05}, CircuitSpec{0.9, 1.1});
  auto back = parse_log(write_log(log));
  REQUIRE(back.samples() == log.samples());
  REQUIRE(back.node_voltages.size() == log.node_voltages.size());
  for (const auto& [node, series] : log.node_voltages) {
    const auto& other = back.node_voltages.at(node);
    for (std::size_t i = 0; i < series.size(); ++i) {
      double denom = std::max(1e-30, std::fabs(series[i]));
      CHECK(std::fabs(series[i] - other[i]) / denom <= 1e-9);
    }
  }
  for (const auto& [dev, series] : log.device_currents) {
    const auto& other = back.device_currents.at(dev);
    for (std::size_t i = 0; i < series.size(); ++i) {
      double denom = std::max(1e-30, std::fabs(series[i]));
      CHECK(std::fabs(series[i] - other[i]) / denom <= 1e-9);
    }
  }
}

TEST_CASE("single-column log writes just the output header") {
  SimulationLog log;
  log.inputs = {0.0, 0.1};
  log.node_voltages["out"] = {1.0, 1.0};
  log.output_node = "out";
  auto text = write_log(log);
  CHECK(text.substr(0, text.find('\n')) == "vin v(out)");
}

TEST_CASE("column order is vin, nodes sorted, devices sorted") {
  SimulationLog log;
  log.inputs = {0.0, 0.1};
  for (const char* node : {"b", "a", "out", "z", "m"})
    log.node_voltages[node] = {0.1, 0.2};
  for (const char* dev : {"M2", "M10", "M1"}) log.device_currents[dev] = {1e-4, 1e-4};
  log.output_node = "out";
  auto header = write_log(log).substr(0, write_log(log).find('\n'));

  // independent oracle: sort the names
  std::vector<std::string> nodes = {"b", "a", "out", "z", "m"};
  std::vector<std::string> devs = {"M2", "M10", "M1"};
  std::sort(nodes.begin(), nodes.end());
  std::sort(devs.begin(), devs.end());
  std::string expect = "vin";
  for (const auto& x : nodes) expect += " v(" + x + ")";
  for (const auto& x : devs) expect += " i(" + x + ")";
  CHECK(header == expect);
}

TEST_CASE("clean generation stays within spec with zero noise") {
  auto n = testutil::parse_fixture("bench/755.sp");
  CircuitSpec spec{0.9, 1.1};
  auto log = gen_log(n, nullptr, BehaviorModel{}, Sweep{0, 1.8, 0.05}, spec);
  const auto& out = log.node_voltages.at(log.output_node);
  for (double v : out) {
    CHECK(v <= spec.v_out_max);
    CHECK(v >= spec.v_out_min);
  }
  // input node is the sweep column, not a node column
  CHECK(log.node_voltages.count("in") == 0);
  CHECK(log.node_voltages.count("0") == 0);
}

TEST_CASE("trojan overlay is confined to the window") {
  auto base = testutil::parse_fixture("bench/642.sp");
  auto planted = inject_trojan(base, "1", "2", 7);
  auto tn = parse_netlist(planted.text).netlist;
  CircuitSpec spec{0.9, 1.1};
  Sweep sweep{0, 1.8, 0.05};

  BehaviorModel model;
  model.seed = 7;
  model.window_lo = 0.8;
  model.window_hi = 1.0;
  model.node_deviation = 0.5;

  auto clean = gen_log(tn, nullptr, model, sweep, spec);
  auto trojan = gen_log(tn, &planted.record, model, sweep, spec);

  SUBCASE("bit-equal outside the window, shifted inside") {
    for (const auto& [node, series] : trojan.node_voltages) {
      const auto& ref = clean.node_voltages.at(node);
      for (std::size_t i = 0; i < series.size(); ++i) {
        bool inside = trojan.inputs[i] >= 0.8 && trojan.inputs[i] < 1.0;
        if (!inside) {
          CAPTURE(node);
          CHECK(series[i] == ref[i]);
        }
      }
    }
    const auto& payload = trojan.node_voltages.at("1");
    const auto& payload_ref = clean.node_voltages.at("1");
    bool any_shift = false;
    for (std::size_t i = 0; i < payload.size(); ++i)
      if (payload[i] != payload_ref[i]) any_shift = true;
    CHECK(any_shift);
  }

  SUBCASE("window locality also holds with noise under one seed") {
    model.noise_sigma = 0.003;
    auto noisy_clean = gen_log(tn, nullptr, model, sweep, spec);
    auto noisy_trojan = gen_log(tn, &planted.record, model, sweep, spec);
    for (const auto& [node, series] : noisy_trojan.node_voltages) {
      const auto& ref = noisy_clean.node_voltages.at(node);
      for (std::size_t i = 0; i < series.size(); ++i) {
        bool inside = noisy_trojan.inputs[i] >= 0.8 && noisy_trojan.inputs[i] < 1.0;
        if (!inside) CHECK(series[i] == ref[i]);
      }
    }
  }

  SUBCASE("output exceeds the spec ceiling by the violation inside the window") {
    const auto& out = trojan.node_voltages.at("out");
    for (std::size_t i = 0; i < out.size(); ++i) {
      bool inside = trojan.inputs[i] >= 0.8 && trojan.inputs[i] < 1.0;
      if (inside) CHECK(out[i] >= spec.v_out_max + model.out_violation - 1e-12);
      else CHECK(out[i] <= spec.v_out_max);
    }
  }
}

TEST_CASE("surged devices scale by exactly the surge factor") {
  auto base = testutil::parse_fixture("bench/738.sp");
  auto planted = inject_trojan(base, "16", "12", 9);
  auto tn = parse_netlist(planted.text).netlist;
  BehaviorModel model;
  model.seed = 9;
  model.current_surge_factor = 5.0;
  CircuitSpec spec{0.9, 1.1};
  Sweep sweep{0, 1.8, 0.05};
  auto clean = gen_log(tn, nullptr, model, sweep, spec);
  auto trojan = gen_log(tn, &planted.record, model, sweep, spec);

  int surged_devices = 0;
  for (const auto& [dev, series] : trojan.device_currents) {
    const auto& ref = clean.device_currents.at(dev);
    bool surged = false;
    for (std::size_t i = 0; i < series.size(); ++i) {
      bool inside = trojan.inputs[i] >= model.window_lo && trojan.inputs[i] < model.window_hi;
      if (inside && series[i] != ref[i]) {
        surged = true;
        CHECK(series[i] == doctest::Approx(5.0 * ref[i]).epsilon(1e-12));
      }
      if (!inside) CHECK(series[i] == ref[i]);
    }
    if (surged) {
      ++surged_devices;
      CHECK(planted.record.trojan_components.count(dev) == 1);
    }
  }
  CHECK(surged_devices == 3);  // the charge-pump pair and the leak device
}

TEST_CASE("generation is deterministic and the sweep stays monotone") {
  auto n = testutil::parse_fixture("bench/642.sp");
  BehaviorModel model;
  model.seed = 123;
  model.noise_sigma = 0.01;
  auto a = gen_log(n, nullptr, model, Sweep{0, 1.8, 0.05}, CircuitSpec{0.9, 1.1});
  auto b = gen_log(n, nullptr, model, Sweep{0, 1.8, 0.05}, CircuitSpec{0.9, 1.1});
  CHECK(write_log(a) == write_log(b));
  for (std::size_t i = 1; i < a.inputs.size(); ++i) CHECK(a.inputs[i] > a.inputs[i - 1]);
}

TEST_CASE("degenerate sweeps are rejected") {
  auto n = testutil::parse_fixture("bench/642.sp");
  CHECK_THROWS_AS(gen_log(n, nullptr, BehaviorModel{}, Sweep{0, 1.8, 0.0}, CircuitSpec{}), Error);
  CHECK_THROWS_AS(gen_log(n, nullptr, BehaviorModel{}, Sweep{1.8, 0.0, 0.05}, CircuitSpec{}),
                  Error);
}

TEST_CASE("impacted nodes must exist in the netlist") {
  auto n = testutil::parse_fixture("bench/642.sp");
  InjectionRecord rec;
  rec.kind = InjectionKind::Trojan;
  rec.impacted_nodes = {"1", "2", "ghost"};
  CHECK_THROWS_CONTAINING(gen_log(n, &rec, BehaviorModel{}, Sweep{0, 1.8, 0.05}, CircuitSpec{}), "ghost");
}
