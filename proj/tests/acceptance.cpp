// Acceptance suite: one pass/fail line per criterion, exit 1 if any fails.
// Everything runs offline against the shipped fixtures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <vector>

#include "spicecheck/detect.hpp"
#include "spicecheck/inject.hpp"
#include "spicecheck/lint.hpp"
#include "spicecheck/llm.hpp"
#include "spicecheck/metrics.hpp"
#include "spicecheck/simlog.hpp"

using namespace spicecheck;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& note = "") {
  std::printf("[%s] %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), note.c_str());
  if (!ok) ++failures;
}

std::string fixture(const std::string& rel) {
  return std::string(SPICECHECK_FIXTURE_DIR) + "/" + rel;
}

std::string golden(const std::string& rel) {
  return std::string(SPICECHECK_GOLDEN_DIR) + "/" + rel;
}

Netlist load(const std::string& rel) {
  return parse_netlist(detail::read_file(fixture(rel))).netlist;
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void lint_taxonomy_and_fix_loop() {
  auto base = load("base/diffamp_rich.sp");
  auto rules = default_ruleset();
  auto t0 = Clock::now();
  int detected = 0, fixed = 0;
  std::string note;
  for (const auto& rule : rules) {
    auto injected = inject_rule(base, rule.id, 42);
    auto netlist = parse_netlist(injected.text).netlist;
    auto report = lint(netlist, rules);
    const auto& [truth_rule, truth_line] = injected.record.bug_truth.at(0);
    bool hit = false;
    for (const auto& f : report.findings)
      if (f.rule_id == truth_rule && f.line_no == truth_line) hit = true;
    if (hit && report.findings.size() == 1) ++detected;
    else note += " miss:" + rule.id;

    auto outcome = apply_fixes(injected.text, report.findings);
    auto relint = lint(parse_netlist(outcome.text).netlist, rules);
    if (relint.findings.empty()) ++fixed;
    else note += " unfixed:" + rule.id;
  }
  double elapsed = ms_since(t0);
  verdict("lint-taxonomy-18", detected == 18 && elapsed < 1000.0,
          std::to_string(detected) + "/18 with correct rule id and line, " +
              std::to_string((int)elapsed) + " ms" + note);
  verdict("fix-loop-18", fixed == 18,
          std::to_string(fixed) + "/18 clean after apply_fixes" + note);
}

void false_positive_suite() {
  std::vector<std::string> corpus;
  for (const auto& entry : fs::directory_iterator(fixture("clean")))
    corpus.push_back(entry.path().string());
  std::sort(corpus.begin(), corpus.end());

  auto rules = default_ruleset();
  std::vector<std::pair<LintFinding, Verdict>> feedback;
  int first_run_findings = 0;
  for (const auto& path : corpus) {
    auto report = lint(parse_netlist(detail::read_file(path)).netlist, rules);
    first_run_findings += static_cast<int>(report.findings.size());
    for (const auto& f : report.findings) feedback.push_back({f, Verdict::FalsePositive});
  }
  auto refined = refine_ruleset(rules, feedback);
  int clean_netlists = 0;
  for (const auto& path : corpus) {
    auto report = lint(parse_netlist(detail::read_file(path)).netlist, refined);
    if (report.findings.empty()) ++clean_netlists;
  }
  verdict("false-positive-suite", clean_netlists == 10,
          std::to_string(clean_netlists) + "/10 clean after one refinement pass (" +
              std::to_string(first_run_findings) + " FP fed back)");
}

void metric_arithmetic() {
  auto make_truth = [](int count) {
    InjectionRecord rec;
    rec.kind = InjectionKind::Bugs;
    for (int i = 0; i < count; ++i) rec.bug_truth.push_back({"rule" + std::to_string(i), i + 2});
    return rec;
  };
  auto make_report = [](const InjectionRecord& rec, int matched) {
    BugReport r;
    for (int i = 0; i < matched; ++i) {
      LintFinding f;
      f.rule_id = rec.bug_truth[i].first;
      f.line_no = rec.bug_truth[i].second;
      f.message = "m";
      r.findings.push_back(f);
    }
    return r;
  };
  auto t1 = make_truth(12);  // 2+5+5 planted, 2+5+4 found
  auto m1 = bug_metrics(t1, make_report(t1, 11), {}, {});
  double c1 = std::stod(format_pct(m1.bug_coverage_pct, 1));
  auto t2 = make_truth(15);  // 4+5+6 planted, 4+5+5 found
  auto m2 = bug_metrics(t2, make_report(t2, 14), {}, {});
  double c2 = std::stod(format_pct(m2.bug_coverage_pct, 1));
  bool ok = std::fabs(c1 - 91.6) <= 0.05 && std::fabs(c2 - 93.3) <= 0.05;
  verdict("metric-arithmetic", ok,
          "coverage renders " + format_pct(m1.bug_coverage_pct, 1) + " and " +
              format_pct(m2.bug_coverage_pct, 1));
}

struct BenchOutcome {
  std::vector<MetricsSummary> union_rows;
  bool all_identified = true;
  bool all_recall_100 = true;
  bool quantized = true;
  double elapsed_ms = 0;
  int rows = 0;
};

BenchOutcome run_trojan_bench() {
  struct Group {
    const char* file;
    std::vector<std::string> payloads;
  };
  std::vector<Group> groups = {
      {"bench/642.sp", {"1", "4", "5", "6", "7", "9", "20", "36", "38", "39"}},
      {"bench/755.sp", {"1", "2", "3", "5", "6", "9", "10", "11", "12", "16"}},
      {"bench/738.sp", {"3", "4", "5", "7", "12", "13", "16", "17", "23", "26"}},
  };
  CircuitSpec spec{0.9, 1.1};
  Sweep sweep{0.0, 1.8, 0.05};
  DetectConfig cfg;  // Union mode, default thresholds
  BenchOutcome out;
  auto t0 = Clock::now();
  for (const auto& group : groups) {
    auto base = load(group.file);
    for (const auto& payload : group.payloads) {
      std::uint64_t seed = detail::mix(7, detail::fnv1a(std::string(group.file) + ":" + payload));
      auto trigger = choose_trigger_node(base, payload);
      auto planted = inject_trojan(base, payload, trigger, seed);
      auto scrambled = scramble(planted.text, planted.record, seed);
      auto netlist = parse_netlist(scrambled.text).netlist;
      BehaviorModel model;  // noise_sigma = 0
      model.seed = seed;
      auto log = gen_log(netlist, &scrambled.record, model, sweep, spec);
      auto report = detect(netlist, log, spec, cfg);
      auto m = trojan_metrics(scrambled.record, report);
      out.union_rows.push_back(m);
      ++out.rows;
      if (!m.trojan_identified.value_or(false)) out.all_identified = false;
      if (std::fabs(m.recall_pct.value_or(0) - 100.0) > 1e-9) out.all_recall_100 = false;
      double cov7 = m.trojan_coverage_pct.value_or(0) * 7.0 / 100.0;
      if (std::fabs(cov7 - std::llround(cov7)) > 1e-9) out.quantized = false;
      double rec3 = m.recall_pct.value_or(0) * 3.0 / 100.0;
      if (std::fabs(rec3 - std::llround(rec3)) > 1e-9) out.quantized = false;
    }
  }
  out.elapsed_ms = ms_since(t0);
  return out;
}

void trojan_end_to_end(const BenchOutcome& bench) {
  auto avg = aggregate(bench.union_rows);
  double precision = avg.precision_pct.value_or(0);
  bool ok = bench.rows == 30 && bench.all_identified && bench.all_recall_100 &&
            precision >= 90.0 && bench.elapsed_ms < 10000.0;
  verdict("trojan-end-to-end-30", ok,
          std::to_string(bench.rows) + " cases, identified " +
              (bench.all_identified ? "30/30" : "<30") + ", recall 100% " +
              (bench.all_recall_100 ? "everywhere" : "violated") + ", avg precision " +
              format_pct(avg.precision_pct, 2) + "%, " + std::to_string((int)bench.elapsed_ms) +
              " ms");
}

void quantization(const BenchOutcome& bench) {
  verdict("quantization-grids", bench.quantized,
          "coverage on the 1/7 grid and recall on the 1/3 grid for all 30 cases");
}

SimulationLog random_log(detail::Rng& rng, Netlist* netlist_out) {
  SimulationLog log;
  std::size_t samples = 5 + rng.next_below(40);
  std::size_t node_count = 2 + rng.next_below(10);
  std::size_t dev_count = 1 + rng.next_below(6);
  for (std::size_t i = 0; i < samples; ++i) log.inputs.push_back(0.05 * (double)i);
  std::vector<double> out;
  for (std::size_t i = 0; i < samples; ++i)
    out.push_back(rng.next_below(4) == 0 ? 2.0 + rng.next_real() : 1.0 + 0.05 * rng.next_real());
  log.node_voltages["out"] = out;
  log.output_node = "out";
  for (std::size_t k = 0; k < node_count; ++k) {
    std::vector<double> v;
    double x = rng.next_real();
    for (std::size_t i = 0; i < samples; ++i) {
      x += (rng.next_real() - 0.5) * (rng.next_below(10) == 0 ? 1.0 : 0.05);
      v.push_back(x);
    }
    log.node_voltages["n" + std::to_string(k)] = v;
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

void mode_containment() {
  detail::Rng rng(606);
  int violations = 0;
  for (int iter = 0; iter < 200; ++iter) {
    Netlist n;
    auto log = random_log(rng, &n);
    DetectConfig u, x;
    u.combine_mode = CombineMode::Union;
    x.combine_mode = CombineMode::Intersection;
    CircuitSpec spec{0.9, 1.1};
    auto du = detect(n, log, spec, u);
    auto dx = detect(n, log, spec, x);
    for (const auto& node : dx.suspect_nodes)
      if (!du.suspect_nodes.count(node)) ++violations;
  }
  verdict("mode-containment-200", violations == 0,
          std::to_string(violations) + " violations over 200 randomized logs");
}

void oracle_equivalence() {
  detail::Rng rng(707);
  int mismatches = 0;
  for (int iter = 0; iter < 100; ++iter) {
    Netlist n;
    auto log = random_log(rng, &n);
    DetectConfig cfg;
    if (iter % 2) cfg.combine_mode = CombineMode::Intersection;
    auto part = classify_inputs(log, CircuitSpec{0.9, 1.1});
    auto a = rule2_nodes(log, part, cfg);
    auto b = reference::rule2_nodes(log, part, cfg);
    if (a.set_a != b.set_a || a.set_b != b.set_b || a.combined != b.combined) ++mismatches;
    auto c = rule3_nodes(log, n, part, cfg);
    auto d = reference::rule3_nodes(log, n, part, cfg);
    if (c.devices != d.devices || c.nodes != d.nodes) ++mismatches;
    for (const auto& [dev, s] : c.stats) {
      const auto& ref = d.stats.at(dev);
      if (s.activation_max != ref.activation_max || s.normal_max != ref.normal_max) ++mismatches;
    }
  }
  verdict("oracle-equivalence-100", mismatches == 0,
          std::to_string(mismatches) + " mismatches against the naive recomputation");
}

void deviation_definition() {
  detail::Rng rng(808);
  int mismatches = 0;
  int series_checked = 0;
  while (series_checked < 1000) {
    auto log = random_log(rng, nullptr);
    for (const auto& [node, v] : log.node_voltages) {
      auto got = deviation_series(log, node);
      auto want = reference::deviation_series(log, node);
      if (got != want) ++mismatches;
      ++series_checked;
      if (series_checked >= 1000) break;
    }
  }
  verdict("deviation-definition-1000", mismatches == 0,
          std::to_string(series_checked) + " series, " + std::to_string(mismatches) +
              " mismatches");
}

void prompt_goldens() {
  bool ok = true;
  std::string note;

  auto netlist_text = detail::read_file(fixture("clean/01_common_source.sp"));
  auto lint_prompt = build_lint_prompt(default_ruleset(), netlist_text);
  if (lint_prompt != detail::read_file(golden("lint_prompt.txt"))) {
    ok = false;
    note += " lint-prompt-drift";
  }
  std::string log_excerpt = "vin v(out)\n0.0 1.0\n0.1 1.0\n";
  DetectConfig u, x;
  u.combine_mode = CombineMode::Union;
  x.combine_mode = CombineMode::Intersection;
  if (build_trojan_prompt(u, {}, netlist_text, log_excerpt, CircuitSpec{0.9, 1.1}) !=
      detail::read_file(golden("trojan_prompt_union.txt"))) {
    ok = false;
    note += " union-prompt-drift";
  }
  if (build_trojan_prompt(x, {}, netlist_text, log_excerpt, CircuitSpec{0.9, 1.1}) !=
      detail::read_file(golden("trojan_prompt_intersection.txt"))) {
    ok = false;
    note += " intersection-prompt-drift";
  }

  // ten hand-written transcripts with frozen expectations
  struct BugCase {
    const char* file;
    std::size_t findings;
    std::size_t residue;
  };
  std::vector<BugCase> bug_cases = {
      {"transcripts/bug_01.txt", 2, 1}, {"transcripts/bug_02.txt", 1, 0},
      {"transcripts/bug_03.txt", 3, 2}, {"transcripts/bug_04.txt", 0, 3},
      {"transcripts/bug_05.txt", 2, 2},
  };
  for (const auto& c : bug_cases) {
    auto parsed = parse_bug_response(detail::read_file(golden(c.file)));
    if (parsed.findings.size() != c.findings || parsed.residue.size() != c.residue) {
      ok = false;
      note += std::string(" ") + c.file;
    }
  }
  struct TrojanCase {
    const char* file;
    bool verdict_flag;
    std::set<std::string> nodes;
    std::size_t residue;
  };
  std::set<std::string> known = {"1", "2", "12", "37", "out", "tc1"};
  std::vector<TrojanCase> trojan_cases = {
      {"transcripts/trojan_01.txt", true, {"12", "37"}, 0},
      {"transcripts/trojan_02.txt", false, {}, 0},
      {"transcripts/trojan_03.txt", true, {"37"}, 2},
      {"transcripts/trojan_04.txt", true, {"1", "2", "tc1"}, 1},
      {"transcripts/trojan_05.txt", false, {}, 1},
  };
  for (const auto& c : trojan_cases) {
    auto parsed = parse_trojan_response(detail::read_file(golden(c.file)), known);
    if (parsed.trojan_detected != c.verdict_flag || parsed.suspect_nodes != c.nodes ||
        parsed.residue.size() != c.residue) {
      ok = false;
      note += std::string(" ") + c.file + "(got v=" + (parsed.trojan_detected ? "1" : "0") +
              " nodes=" + std::to_string(parsed.suspect_nodes.size()) +
              " residue=" + std::to_string(parsed.residue.size()) + ")";
    }
  }
  verdict("prompt-goldens", ok, note.empty() ? "prompts byte-stable, 10 transcripts recovered" : note);
}

}  // namespace

int main() {
  std::printf("acceptance suite (offline, fixtures at %s)\n", SPICECHECK_FIXTURE_DIR);
  lint_taxonomy_and_fix_loop();
  false_positive_suite();
  metric_arithmetic();
  auto bench = run_trojan_bench();
  trojan_end_to_end(bench);
  mode_containment();
  oracle_equivalence();
  quantization(bench);
  deviation_definition();
  prompt_goldens();
  std::printf("%s\n", failures == 0 ? "all criteria passed" : "CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
