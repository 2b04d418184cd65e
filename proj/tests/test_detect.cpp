#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "spicecheck/detect.hpp"
#include "spicecheck/inject.hpp"
#include "spicecheck/metrics.hpp"

using namespace spicecheck;

namespace {

SimulationLog tiny_log(const std::vector<double>& out_series) {
  SimulationLog log;
  for (std::size_t i = 0; i < out_series.size(); ++i) log.inputs.push_back(0.1 * (double)i);
  log.node_voltages["out"] = out_series;
  log.output_node = "out";
  return log;
}

// small random logs for property tests
SimulationLog random_log(detail::Rng& rng, Netlist* netlist_out = nullptr) {
  SimulationLog log;
  std::size_t samples = 5 + rng.next_below(30);
  std::size_t node_count = 2 + rng.next_below(8);
  std::size_t dev_count = 1 + rng.next_below(5);
  for (std::size_t i = 0; i < samples; ++i) log.inputs.push_back(0.05 * (double)i);
  std::vector<double> out;
  for (std::size_t i = 0; i < samples; ++i)
    out.push_back(rng.next_below(4) == 0 ? 2.0 + rng.next_real() : 1.0 + 0.05 * rng.next_real());
  log.node_voltages["out"] = out;
  log.output_node = "out";
  for (std::size_t k = 0; k < node_count; ++k) {
    std::string name = "n" + std::to_string(k);
    std::vector<double> v;
    double x = rng.next_real();
    for (std::size_t i = 0; i < samples; ++i) {
      x += (rng.next_real() - 0.5) * (rng.next_below(10) == 0 ? 1.0 : 0.05);
      v.push_back(x);
    }
    log.node_voltages[name] = v;
  }
  Netlist n;
  n.title = "rand";
  for (std::size_t k = 0; k < dev_count; ++k) {
    std::string name = "M" + std::to_string(k + 1);
    std::vector<double> c;
    double base = 1e-4 * (1.0 + rng.next_real());
    for (std::size_t i = 0; i < samples; ++i)
      c.push_back(base * (rng.next_below(12) == 0 ? 6.0 + rng.next_real() : 1.0));
    log.device_currents[name] = c;
    Element e;
    e.kind = ElementKind::Mosfet;
    e.name = name;
    e.nodes = {"n" + std::to_string(k % node_count), "n" + std::to_string((k + 1) % node_count),
               "n" + std::to_string((k + 2) % node_count), "0"};
    e.model = "NMOS";
    n.elements.push_back(e);
  }
  if (netlist_out) *netlist_out = n;
  return log;
}

bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a)
    if (!b.count(x)) return false;
  return true;
}

}  // namespace

TEST_CASE("classify_inputs marks exactly the out-of-spec samples") {
  CircuitSpec spec{0.9, 1.1};
  SUBCASE("all in spec") {
    auto part = classify_inputs(tiny_log({1.0, 1.0, 1.0}), spec);
    CHECK(part.activation.empty());
    CHECK(part.normal.size() == 3);
  }
  SUBCASE("one violation") {
    auto part = classify_inputs(tiny_log({1.0, 1.0, 2.0}), spec);
    CHECK(part.activation == std::vector<int>{2});
  }
  SUBCASE("window from the generator maps to its sample indices") {
    auto n = testutil::parse_fixture("bench/642.sp");
    auto planted = inject_trojan(n, "1", "2", 3);
    auto tn = parse_netlist(planted.text).netlist;
    BehaviorModel model;
    model.seed = 3;
    model.window_lo = 0.5;  // samples 10..14 under a 0.05 step
    model.window_hi = 0.75;
    auto log = gen_log(tn, &planted.record, model, Sweep{0, 1.8, 0.05}, spec);
    auto part = classify_inputs(log, spec);
    CHECK(part.activation == std::vector<int>{10, 11, 12, 13, 14});
  }
}

TEST_CASE("deviation series is the first difference") {
  SimulationLog log = tiny_log({1.0, 1.0, 1.0, 2.5});
  auto d = deviation_series(log, "out");
  CHECK(d == std::vector<double>{0.0, 0.0, 1.5});
  SimulationLog flat = tiny_log({0.7, 0.7, 0.7});
  auto z = deviation_series(flat, "out");
  CHECK(z == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(deviation_series(log, "ghost"), Error);
}

TEST_CASE("deviation peaks at the window entry for a planted node") {
  auto base = testutil::parse_fixture("bench/642.sp");
  auto planted = inject_trojan(base, "37", choose_trigger_node(base, "37"), 11);
  auto tn = parse_netlist(planted.text).netlist;
  BehaviorModel model;
  model.seed = 11;
  model.node_deviation = 0.5;
  auto log = gen_log(tn, &planted.record, model, Sweep{0, 1.8, 0.05}, CircuitSpec{0.9, 1.1});
  auto devs = deviation_series(log, "37");
  std::size_t argmax = 0;
  for (std::size_t j = 1; j < devs.size(); ++j)
    if (std::fabs(devs[j]) > std::fabs(devs[argmax])) argmax = j;
  // entry step leads into the first window sample (vin = 0.8 at index 16)
  CHECK(argmax == 15);
  CHECK(devs[argmax] > 0);
}

TEST_CASE("rule2 on a single-node log returns that node as the argmax") {
  SimulationLog log;
  log.inputs = {0.0, 0.1, 0.2};
  log.node_voltages["out"] = {1.0, 2.0, 1.0};
  log.node_voltages["x"] = {0.0, 0.2, 0.2};
  log.output_node = "out";
  auto part = classify_inputs(log, CircuitSpec{0.9, 1.1});
  REQUIRE(part.activation == std::vector<int>{1});
  auto r = rule2_nodes(log, part, DetectConfig{});
  CHECK(r.set_b == std::set<std::string>{"x"});
}

TEST_CASE("rule2 hand-built three-node case") {
  SimulationLog log;
  log.inputs = {0, 1, 2, 3, 4, 5};
  log.node_voltages["out"] = {0.5, 0.5, 0.5, 2.0, 0.5, 0.5};
  log.node_voltages["x"] = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  log.node_voltages["a"] = {0.10, 0.11, 0.10, 0.11, 0.10, 0.11};
  log.node_voltages["b"] = {0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  log.output_node = "out";
  CircuitSpec spec{0.0, 1.0};
  auto part = classify_inputs(log, spec);
  REQUIRE(part.activation == std::vector<int>{3});

  for (CombineMode mode : {CombineMode::Union, CombineMode::Intersection}) {
    DetectConfig cfg;
    cfg.combine_mode = mode;
    auto r = rule2_nodes(log, part, cfg);
    CHECK(r.set_a == std::set<std::string>{"x"});
    CHECK(r.set_b == std::set<std::string>{"x"});
    CHECK(r.combined == std::set<std::string>{"x"});
  }
}

TEST_CASE("rule2 with empty activation returns empty sets") {
  SimulationLog log = tiny_log({1.0, 1.0, 1.0});
  log.node_voltages["x"] = {0.0, 1.0, 0.0};
  auto part = classify_inputs(log, CircuitSpec{0.9, 1.1});
  auto r = rule2_nodes(log, part, DetectConfig{});
  CHECK(r.set_a.empty());
  CHECK(r.set_b.empty());
  CHECK(r.combined.empty());
}

TEST_CASE("rule3 flags surged devices and maps drain gate source") {
  Netlist n;
  n.title = "t";
  Element m9;
  m9.kind = ElementKind::Mosfet;
  m9.name = "M9";
  m9.nodes = {"d", "g", "s", "0"};
  m9.model = "NMOS";
  Element m1 = m9;
  m1.name = "M1";
  m1.nodes = {"p", "q", "r", "0"};
  n.elements = {m9, m1};

  SimulationLog log;
  log.inputs = {0, 1, 2, 3};
  log.node_voltages["out"] = {0.5, 0.5, 2.0, 0.5};
  log.output_node = "out";
  log.device_currents["M9"] = {1e-4, 1e-4, 5e-4, 1e-4};
  log.device_currents["M1"] = {2e-4, 2e-4, 2e-4, 2e-4};
  auto part = classify_inputs(log, CircuitSpec{0.0, 1.0});
  REQUIRE(part.activation == std::vector<int>{2});

  auto r = rule3_nodes(log, n, part, DetectConfig{});
  CHECK(r.devices == std::set<std::string>{"M9"});
  CHECK(r.nodes == std::set<std::string>{"d", "g", "s"});

  SUBCASE("flat currents flag nothing") {
    log.device_currents["M9"] = {1e-4, 1e-4, 1e-4, 1e-4};
    auto r2 = rule3_nodes(log, n, part, DetectConfig{});
    CHECK(r2.devices.empty());
    CHECK(r2.nodes.empty());
  }
  SUBCASE("empty activation flags nothing") {
    InputPartition none;
    none.normal = {0, 1, 2, 3};
    auto r3 = rule3_nodes(log, n, none, DetectConfig{});
    CHECK(r3.devices.empty());
  }
}

TEST_CASE("trojan-free fixture detects nothing") {
  for (const char* f : {"bench/642.sp", "bench/755.sp", "bench/738.sp"}) {
    CAPTURE(f);
    auto n = testutil::parse_fixture(f);
    BehaviorModel model;
    model.seed = 21;
    auto log = gen_log(n, nullptr, model, Sweep{0, 1.8, 0.05}, CircuitSpec{0.9, 1.1});
    auto report = detect(n, log, CircuitSpec{0.9, 1.1}, DetectConfig{});
    CHECK_FALSE(report.trojan_detected);
    CHECK(report.suspect_nodes.empty());
    CHECK(report.suspect_components.empty());
  }
}

TEST_CASE("planted 642_troj_1 detects with perfect node precision and recall") {
  auto base = testutil::parse_fixture("bench/642.sp");
  auto planted = inject_trojan(base, "1", "2", 1);
  auto tn = parse_netlist(planted.text).netlist;
  CircuitSpec spec{0.9, 1.1};
  BehaviorModel model;
  model.seed = 1;
  model.node_deviation = 0.5;
  model.current_surge_factor = 5.0;
  auto log = gen_log(tn, &planted.record, model, Sweep{0, 1.8, 0.05}, spec);
  auto report = detect(tn, log, spec, DetectConfig{});
  CHECK(report.trojan_detected);
  CHECK(subset(planted.record.impacted_nodes, report.suspect_nodes));
  auto m = trojan_metrics(planted.record, report);
  CHECK(m.precision_pct == doctest::Approx(100.0));
  CHECK(m.recall_pct == doctest::Approx(100.0));
  CHECK(*m.trojan_identified);
}

TEST_CASE("intersection mode never exceeds union mode") {
  detail::Rng rng(505);
  for (int iter = 0; iter < 40; ++iter) {
    Netlist n;
    auto log = random_log(rng, &n);
    auto part = classify_inputs(log, CircuitSpec{0.9, 1.1});
    DetectConfig u, x;
    u.combine_mode = CombineMode::Union;
    x.combine_mode = CombineMode::Intersection;
    auto ru = rule2_nodes(log, part, u);
    auto rx = rule2_nodes(log, part, x);
    CHECK(subset(rx.combined, ru.combined));
    auto du = detect(n, log, CircuitSpec{0.9, 1.1}, u);
    auto dx = detect(n, log, CircuitSpec{0.9, 1.1}, x);
    CHECK(subset(dx.suspect_nodes, du.suspect_nodes));
  }
}

TEST_CASE("partition matches a brute-force interval check") {
  detail::Rng rng(99);
  for (int iter = 0; iter < 50; ++iter) {
    auto log = random_log(rng);
    CircuitSpec spec{0.9, 1.1};
    auto part = classify_inputs(log, spec);
    const auto& out = log.node_voltages.at("out");
    std::vector<int> expect_act, expect_norm;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] >= spec.v_out_min && out[i] <= spec.v_out_max)
        expect_norm.push_back((int)i);
      else
        expect_act.push_back((int)i);
    }
    CHECK(part.activation == expect_act);
    CHECK(part.normal == expect_norm);
  }
}

TEST_CASE("deviation series equals an independent difference loop") {
  detail::Rng rng(7);
  for (int iter = 0; iter < 25; ++iter) {
    auto log = random_log(rng);
    for (const auto& [node, series] : log.node_voltages) {
      auto got = deviation_series(log, node);
      auto want = reference::deviation_series(log, node);
      CHECK(got == want);
    }
  }
}

TEST_CASE("raising thresholds never grows the flagged sets") {
  detail::Rng rng(404);
  for (int iter = 0; iter < 30; ++iter) {
    Netlist n;
    auto log = random_log(rng, &n);
    auto part = classify_inputs(log, CircuitSpec{0.9, 1.1});
    DetectConfig low, high;
    low.dev_rel_threshold = 2.0;
    high.dev_rel_threshold = 6.0;
    low.current_rel_threshold = 3.0;
    high.current_rel_threshold = 9.0;
    auto r2_low = rule2_nodes(log, part, low);
    auto r2_high = rule2_nodes(log, part, high);
    CHECK(subset(r2_high.set_a, r2_low.set_a));
    auto r3_low = rule3_nodes(log, n, part, low);
    auto r3_high = rule3_nodes(log, n, part, high);
    CHECK(subset(r3_high.devices, r3_low.devices));
  }
}

TEST_CASE("parallel kernels match the serial reference") {
  detail::Rng rng(2024);
  for (int iter = 0; iter < 25; ++iter) {
    Netlist n;
    auto log = random_log(rng, &n);
    auto part = classify_inputs(log, CircuitSpec{0.9, 1.1});
    DetectConfig cfg;
    if (iter % 2) cfg.combine_mode = CombineMode::Intersection;
    auto a = rule2_nodes(log, part, cfg);
    auto b = reference::rule2_nodes(log, part, cfg);
    CHECK(a.set_a == b.set_a);
    CHECK(a.set_b == b.set_b);
    CHECK(a.combined == b.combined);
    auto c = rule3_nodes(log, n, part, cfg);
    auto d = reference::rule3_nodes(log, n, part, cfg);
    CHECK(c.devices == d.devices);
    CHECK(c.nodes == d.nodes);
  }
}

TEST_CASE("detection report json carries the evidence trail") {
  auto base = testutil::parse_fixture("bench/642.sp");
  auto planted = inject_trojan(base, "1", "2", 1);
  auto tn = parse_netlist(planted.text).netlist;
  BehaviorModel model;
  model.seed = 1;
  auto log = gen_log(tn, &planted.record, model, Sweep{0, 1.8, 0.05}, CircuitSpec{0.9, 1.1});
  auto report = detect(tn, log, CircuitSpec{0.9, 1.1}, DetectConfig{});
  auto j = detection_to_json(report);
  CHECK(j.find("trojan_detected") != std::string::npos);
  CHECK(j.find("activation_indices") != std::string::npos);
  CHECK(j.find("set_a") != std::string::npos);
  CHECK(j.find("ratios") != std::string::npos);
  CHECK(j.find("union") != std::string::npos);
}

TEST_CASE("log and netlist mismatches warn and proceed on the intersection") {
  Netlist n;
  n.title = "t";
  Element r;
  r.kind = ElementKind::Resistor;
  r.name = "R1";
  r.nodes = {"x", "0"};
  n.elements = {r};
  SimulationLog log;
  log.inputs = {0, 1, 2};
  log.node_voltages["out"] = {0.5, 2.0, 0.5};
  log.node_voltages["x"] = {0.0, 0.5, 0.0};
  log.node_voltages["ghost"] = {0.0, 5.0, 0.0};
  log.device_currents["Mghost"] = {1e-4, 1e-3, 1e-4};
  log.output_node = "out";
  auto report = detect(n, log, CircuitSpec{0.0, 1.0}, DetectConfig{});
  CHECK(report.warnings.size() == 2);
  CHECK(report.suspect_nodes.count("ghost") == 0);
}
