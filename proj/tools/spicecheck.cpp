// spicecheck: lint, repair, corrupt and analyze SPICE netlists and their
// DC-sweep logs from one binary. Exit codes: 0 clean, 1 findings/detections,
// 2 usage or configuration errors.
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "toml_lite.hpp"

#include "spicecheck/detect.hpp"
#include "spicecheck/inject.hpp"
#include "spicecheck/lint.hpp"
#include "spicecheck/llm.hpp"
#include "spicecheck/metrics.hpp"
#include "spicecheck/netlist.hpp"
#include "spicecheck/simlog.hpp"

namespace fs = std::filesystem;
using namespace spicecheck;
using json = nlohmann::ordered_json;

namespace {

struct Output {
  std::string path;  // empty = stdout
  void emit(const std::string& content) const {
    if (path.empty()) {
      std::cout << content;
    } else {
      detail::write_file(path, content);
    }
  }
};

Netlist load_netlist(const std::string& path) {
  auto parsed = parse_netlist(detail::read_file(path));
  return std::move(parsed.netlist);
}

Ruleset load_rules(const std::string& rules_path) {
  if (rules_path.empty()) return default_ruleset();
  return ruleset_from_json(detail::read_file(rules_path));
}

CircuitSpec parse_spec(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw Error("bad-spec", "--spec wants lo:hi, got '" + s + "'");
  CircuitSpec spec;
  spec.v_out_min = std::stod(s.substr(0, colon));
  spec.v_out_max = std::stod(s.substr(colon + 1));
  if (!(spec.v_out_min < spec.v_out_max))
    throw Error("bad-spec", "--spec wants lo < hi");
  return spec;
}

CombineMode parse_mode(const std::string& s) {
  if (detail::iequals(s, "union")) return CombineMode::Union;
  if (detail::iequals(s, "intersection")) return CombineMode::Intersection;
  throw Error("bad-mode", "--mode wants union|intersection, got '" + s + "'");
}

std::string format_bool(bool b) { return b ? "1" : "0"; }

// ---------------------------------------------------------------- bench ---

struct BenchCaseRow {
  std::string label;
  bool failed = false;
  std::string error;
  MetricsSummary union_metrics;
  MetricsSummary inter_metrics;
};

int run_bench(const std::string& config_path, std::string out_dir_flag) {
  fs::path cfg_dir = fs::path(config_path).parent_path();
  json cfg = tomllite::parse(detail::read_file(config_path));
  if (!cfg.contains("case") || cfg["case"].empty()) {
    std::cerr << "bench: config lists no cases\n";
    return 2;
  }
  std::vector<std::int64_t> seeds;
  if (cfg.contains("seeds"))
    for (const auto& s : cfg["seeds"]) seeds.push_back(s.get<std::int64_t>());
  if (seeds.empty()) {
    std::cerr << "bench: config needs a nonempty seeds list\n";
    return 2;
  }
  CircuitSpec spec = parse_spec(cfg.value("spec", "0.9:1.1"));
  std::string out_dir = !out_dir_flag.empty() ? out_dir_flag : cfg.value("output_dir", "bench_out");
  fs::create_directories(out_dir);

  // netlist paths resolve against corpus_dir when given, else the config dir
  fs::path corpus_root = cfg_dir;
  if (cfg.contains("corpus_dir")) {
    fs::path c = cfg["corpus_dir"].get<std::string>();
    corpus_root = c.is_absolute() ? c : cfg_dir / c;
  }

  DetectConfig thresholds;
  thresholds.dev_rel_threshold = cfg.value("dev_rel_threshold", thresholds.dev_rel_threshold);
  thresholds.dev_abs_floor = cfg.value("dev_abs_floor", thresholds.dev_abs_floor);
  thresholds.current_rel_threshold =
      cfg.value("current_rel_threshold", thresholds.current_rel_threshold);
  thresholds.current_abs_floor = cfg.value("current_abs_floor", thresholds.current_abs_floor);

  struct CaseJob {
    std::string file;
    std::string payload;
    std::uint64_t seed;
  };
  std::vector<CaseJob> jobs;
  for (const auto& c : cfg["case"]) {
    fs::path netlist_path = corpus_root / c.at("netlist").get<std::string>();
    if (!fs::exists(netlist_path)) netlist_path = c.at("netlist").get<std::string>();
    for (const auto& node : c.at("payload_nodes")) {
      for (std::int64_t seed : seeds) {
        CaseJob job;
        job.file = netlist_path.string();
        job.payload = node.get<std::string>();
        job.seed = detail::mix(static_cast<std::uint64_t>(seed),
                               detail::fnv1a(netlist_path.filename().string() + ":" + job.payload));
        jobs.push_back(job);
      }
    }
  }

  Sweep sweep{0.0, 1.8, 0.05};
  std::vector<BenchCaseRow> rows(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(jobs.size()); ++i) {
    const CaseJob& job = jobs[i];
    BenchCaseRow row;
    try {
      Netlist base = load_netlist(job.file);
      std::string trigger = choose_trigger_node(base, job.payload);
      auto planted = inject_trojan(base, job.payload, trigger, job.seed);
      auto scrambled = scramble(planted.text, planted.record, job.seed);
      Netlist tn = parse_netlist(scrambled.text).netlist;
      row.label = scrambled.record.label;

      BehaviorModel model;
      model.seed = job.seed;
      auto clean_log = gen_log(tn, nullptr, model, sweep, spec);
      auto trojan_log = gen_log(tn, &scrambled.record, model, sweep, spec);
      detail::write_file((fs::path(out_dir) / (row.label + ".sp")).string(), scrambled.text);
      detail::write_file((fs::path(out_dir) / (row.label + ".truth.json")).string(),
                         record_to_json(scrambled.record));
      detail::write_file((fs::path(out_dir) / (row.label + ".clean.log")).string(),
                         write_log(clean_log));
      detail::write_file((fs::path(out_dir) / (row.label + ".log")).string(),
                         write_log(trojan_log));

      DetectConfig union_cfg = thresholds;
      union_cfg.combine_mode = CombineMode::Union;
      DetectConfig inter_cfg = thresholds;
      inter_cfg.combine_mode = CombineMode::Intersection;
      row.union_metrics = trojan_metrics(scrambled.record, detect(tn, trojan_log, spec, union_cfg));
      row.inter_metrics = trojan_metrics(scrambled.record, detect(tn, trojan_log, spec, inter_cfg));
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      if (row.label.empty()) row.label = fs::path(job.file).stem().string() + "_troj_" + job.payload;
    }
    rows[i] = row;
  }

  std::ostringstream csv;
  csv << "case,label,identified_u,coverage_u,precision_u,recall_u,"
         "identified_i,coverage_i,precision_i,recall_i\n";
  std::vector<MetricsSummary> union_rows, inter_rows;
  json jrows = json::array();
  int case_no = 0;
  for (const auto& row : rows) {
    ++case_no;
    if (row.failed) {
      csv << case_no << "," << row.label << ",error,,,,,,,\n";
      jrows.push_back({{"case", case_no}, {"label", row.label}, {"error", row.error}});
      continue;
    }
    union_rows.push_back(row.union_metrics);
    inter_rows.push_back(row.inter_metrics);
    csv << case_no << "," << row.label << ","
        << format_bool(row.union_metrics.trojan_identified.value_or(false)) << ","
        << format_pct(row.union_metrics.trojan_coverage_pct, 2) << ","
        << format_pct(row.union_metrics.precision_pct, 2) << ","
        << format_pct(row.union_metrics.recall_pct, 2) << ","
        << format_bool(row.inter_metrics.trojan_identified.value_or(false)) << ","
        << format_pct(row.inter_metrics.trojan_coverage_pct, 2) << ","
        << format_pct(row.inter_metrics.precision_pct, 2) << ","
        << format_pct(row.inter_metrics.recall_pct, 2) << "\n";
    jrows.push_back({{"case", case_no},
                     {"label", row.label},
                     {"union", json::parse(metrics_to_json(row.union_metrics))},
                     {"intersection", json::parse(metrics_to_json(row.inter_metrics))}});
  }
  if (!union_rows.empty()) {
    auto avg_u = aggregate(union_rows);
    auto avg_i = aggregate(inter_rows);
    csv << ",Average," << format_pct(avg_u.trojan_identified_pct, 2) << ","
        << format_pct(avg_u.trojan_coverage_pct, 2) << "," << format_pct(avg_u.precision_pct, 2)
        << "," << format_pct(avg_u.recall_pct, 2) << ","
        << format_pct(avg_i.trojan_identified_pct, 2) << ","
        << format_pct(avg_i.trojan_coverage_pct, 2) << "," << format_pct(avg_i.precision_pct, 2)
        << "," << format_pct(avg_i.recall_pct, 2) << "\n";
  }

  detail::write_file((fs::path(out_dir) / "bench.csv").string(), csv.str());
  json jout;
  jout["rows"] = jrows;
  detail::write_file((fs::path(out_dir) / "bench.json").string(), jout.dump(2) + "\n");
  std::cout << csv.str();
  for (const auto& row : rows)
    if (row.failed) std::cerr << "bench: case " << row.label << " failed: " << row.error << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPICE netlist lint, fault injection and anomaly analysis"};
  app.require_subcommand(1);

  std::string netlist_path, log_path, rules_path, out_path, truth_path, spec_str = "0.9:1.1";
  std::string mode_str = "union", config_path, response_path, endpoint_path, task = "lint";
  std::string sweep_str = "0:1.8:0.05", window_str = "0.8:1.0";
  std::uint64_t seed = 1;
  int easy = 0, medium = 0, difficult = 0;
  double deviation = 0.08, violation = 0.3, surge = 8.0, noise = 0.0;
  bool do_scramble = false, save_transcripts = false;
  std::string payload_node, trigger_node;
  std::string report_path, postfix_path, clean_report_path, detect_report_path;

  auto* lint_cmd = app.add_subcommand("lint", "lint a netlist against the shipped rules");
  lint_cmd->add_option("netlist", netlist_path)->required();
  lint_cmd->add_option("--rules", rules_path, "ruleset JSON (default: shipped 18 rules)");
  lint_cmd->add_option("--out", out_path);

  auto* fix_cmd = app.add_subcommand("fix", "lint, apply every suggestion, emit corrected text");
  fix_cmd->add_option("netlist", netlist_path)->required();
  fix_cmd->add_option("--rules", rules_path);
  fix_cmd->add_option("--out", out_path, "corrected netlist (default: stdout)");
  fix_cmd->add_option("--report", report_path, "also write the JSON bug report here");

  auto* ib_cmd = app.add_subcommand("inject-bugs", "seed syntax bugs with ground truth");
  ib_cmd->add_option("netlist", netlist_path)->required();
  ib_cmd->add_option("--easy", easy);
  ib_cmd->add_option("--medium", medium);
  ib_cmd->add_option("--difficult", difficult);
  ib_cmd->add_option("--seed", seed);
  ib_cmd->add_option("--out", out_path);
  ib_cmd->add_option("--truth", truth_path, "truth sidecar (default: <out>.truth.json)");

  auto* it_cmd = app.add_subcommand("inject-trojan", "plant the 7-component trigger template");
  it_cmd->add_option("netlist", netlist_path)->required();
  it_cmd->add_option("--payload", payload_node)->required();
  it_cmd->add_option("--trigger", trigger_node, "trigger tap (default: first eligible node)");
  it_cmd->add_option("--seed", seed);
  it_cmd->add_flag("--scramble", do_scramble, "scramble the planted netlist");
  it_cmd->add_option("--out", out_path);
  it_cmd->add_option("--truth", truth_path);

  auto* gl_cmd = app.add_subcommand("gen-log", "synthesize a DC sweep log");
  gl_cmd->add_option("--netlist", netlist_path)->required();
  gl_cmd->add_option("--truth", truth_path, "trojan truth JSON; omit for a clean log");
  gl_cmd->add_option("--spec", spec_str);
  gl_cmd->add_option("--sweep", sweep_str, "lo:hi:step");
  gl_cmd->add_option("--window", window_str, "trigger window lo:hi");
  gl_cmd->add_option("--deviation", deviation);
  gl_cmd->add_option("--violation", violation);
  gl_cmd->add_option("--surge", surge);
  gl_cmd->add_option("--noise", noise);
  gl_cmd->add_option("--seed", seed);
  gl_cmd->add_option("--out", out_path);

  auto* det_cmd = app.add_subcommand("detect", "run the anomaly rules over a log");
  det_cmd->add_option("--netlist", netlist_path)->required();
  det_cmd->add_option("--log", log_path)->required();
  det_cmd->add_option("--spec", spec_str);
  det_cmd->add_option("--mode", mode_str, "union|intersection");
  det_cmd->add_option("--out", out_path);

  auto* score_cmd = app.add_subcommand("score", "score a report against injection truth");
  score_cmd->add_option("--truth", truth_path)->required();
  score_cmd->add_option("--report", report_path, "lint report JSON (bug truth)");
  score_cmd->add_option("--post-fix-report", postfix_path, "re-lint after fixes");
  score_cmd->add_option("--clean-report", clean_report_path, "lint report of the clean netlist");
  score_cmd->add_option("--detect-report", detect_report_path, "detection report JSON");
  score_cmd->add_option("--out", out_path);

  auto* bench_cmd = app.add_subcommand("bench", "run the full trojan benchmark sweep");
  bench_cmd->add_option("--config", config_path)->required();
  bench_cmd->add_option("--out", out_path, "output directory (overrides config)");

  auto* llm_cmd = app.add_subcommand("llm", "build prompts / parse transcripts for an external model");
  llm_cmd->add_option("--task", task, "lint|trojan");
  llm_cmd->add_option("--netlist", netlist_path)->required();
  llm_cmd->add_option("--log", log_path);
  llm_cmd->add_option("--rules", rules_path);
  llm_cmd->add_option("--spec", spec_str);
  llm_cmd->add_option("--mode", mode_str);
  llm_cmd->add_option("--response", response_path, "parse this transcript instead of calling out");
  llm_cmd->add_option("--endpoint", endpoint_path, "endpoint config JSON; triggers a live call");
  llm_cmd->add_option("--out", out_path);
  llm_cmd->add_flag("--save-transcripts", save_transcripts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Output out{out_path};

    if (lint_cmd->parsed()) {
      auto rules = load_rules(rules_path);
      auto report = lint(load_netlist(netlist_path), rules);
      out.emit(report_to_json(report, rules));
      return report.findings.empty() ? 0 : 1;
    }

    if (fix_cmd->parsed()) {
      auto rules = load_rules(rules_path);
      std::string text = detail::read_file(netlist_path);
      auto report = lint(parse_netlist(text).netlist, rules);
      auto outcome = apply_fixes(text, report.findings);
      report.corrected_text = outcome.text;
      if (!report_path.empty()) detail::write_file(report_path, report_to_json(report, rules));
      out.emit(outcome.text);
      for (const auto& c : outcome.conflicts) std::cerr << "fix: conflict: " << c << "\n";
      return 0;
    }

    if (ib_cmd->parsed()) {
      BugPlan plan{easy, medium, difficult, seed};
      auto result = inject_bugs(load_netlist(netlist_path), plan);
      out.emit(result.text);
      std::string sidecar = truth_path.empty()
                                ? (out_path.empty() ? "injected.truth.json" : out_path + ".truth.json")
                                : truth_path;
      detail::write_file(sidecar, record_to_json(result.record));
      return 0;
    }

    if (it_cmd->parsed()) {
      Netlist n = load_netlist(netlist_path);
      std::string trigger = trigger_node.empty() ? choose_trigger_node(n, payload_node) : trigger_node;
      auto result = inject_trojan(n, payload_node, trigger, seed);
      if (do_scramble) result = scramble(result.text, result.record, seed);
      out.emit(result.text);
      std::string sidecar = truth_path;
      if (sidecar.empty()) {
        // next to the emitted netlist when one was written
        fs::path dir = out_path.empty() ? fs::path(".") : fs::path(out_path).parent_path();
        sidecar = (dir / (result.record.label + ".truth.json")).string();
      }
      detail::write_file(sidecar, record_to_json(result.record));
      return 0;
    }

    if (gl_cmd->parsed()) {
      Netlist n = load_netlist(netlist_path);
      Sweep sweep;
      {
        std::istringstream ss(sweep_str);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c);
        sweep.v_lo = std::stod(a);
        sweep.v_hi = std::stod(b);
        sweep.step = std::stod(c);
      }
      BehaviorModel model;
      {
        auto colon = window_str.find(':');
        if (colon == std::string::npos) throw Error("bad-window", "--window wants lo:hi");
        model.window_lo = std::stod(window_str.substr(0, colon));
        model.window_hi = std::stod(window_str.substr(colon + 1));
      }
      model.node_deviation = deviation;
      model.out_violation = violation;
      model.current_surge_factor = surge;
      model.noise_sigma = noise;
      model.seed = seed;
      std::optional<InjectionRecord> rec;
      if (!truth_path.empty()) rec = record_from_json(detail::read_file(truth_path));
      auto log = gen_log(n, rec ? &*rec : nullptr, model, sweep, parse_spec(spec_str));
      out.emit(write_log(log));
      return 0;
    }

    if (det_cmd->parsed()) {
      DetectConfig cfg;
      cfg.combine_mode = parse_mode(mode_str);
      auto report = detect(load_netlist(netlist_path), parse_log(detail::read_file(log_path)),
                           parse_spec(spec_str), cfg);
      out.emit(detection_to_json(report));
      return report.trojan_detected ? 1 : 0;
    }

    if (score_cmd->parsed()) {
      auto truth = record_from_json(detail::read_file(truth_path));
      MetricsSummary m;
      if (truth.kind == InjectionKind::Bugs) {
        if (report_path.empty())
          throw Error("bad-args", "score: bug truth needs --report");
        auto load_findings = [](const std::string& path) {
          std::vector<LintFinding> out;
          if (path.empty()) return out;
          json j = json::parse(detail::read_file(path));
          for (const auto& jf : j.at("findings")) {
            LintFinding f;
            f.rule_id = jf.at("rule_id").get<std::string>();
            f.line_no = jf.at("line").get<int>();
            f.snippet = jf.value("snippet", "");
            f.message = jf.value("message", "");
            out.push_back(std::move(f));
          }
          return out;
        };
        auto pre = load_findings(report_path);
        auto post = load_findings(postfix_path);
        auto clean = load_findings(clean_report_path);
        // resolved: per rule id, however many findings disappeared after fixing
        std::map<std::string, int> post_count;
        for (const auto& f : post) ++post_count[f.rule_id];
        std::vector<LintFinding> resolved;
        for (const auto& f : pre) {
          auto it = post_count.find(f.rule_id);
          if (it != post_count.end() && it->second > 0) {
            --it->second;
            continue;
          }
          resolved.push_back(f);
        }
        BugReport report;
        report.findings = pre;
        m = bug_metrics(truth, report, resolved, clean);
      } else {
        if (detect_report_path.empty())
          throw Error("bad-args", "score: trojan truth needs --detect-report");
        json j = json::parse(detail::read_file(detect_report_path));
        DetectionReport report;
        report.trojan_detected = j.value("trojan_detected", false);
        for (const auto& node : j.at("suspect_nodes"))
          report.suspect_nodes.insert(node.get<std::string>());
        for (const auto& c : j.at("suspect_components"))
          report.suspect_components.insert(c.get<std::string>());
        m = trojan_metrics(truth, report);
      }
      out.emit(metrics_to_json(m));
      return 0;
    }

    if (bench_cmd->parsed()) return run_bench(config_path, out_path);

    if (llm_cmd->parsed()) {
      Netlist n = load_netlist(netlist_path);
      std::string netlist_text = detail::read_file(netlist_path);
      std::string prompt;
      if (task == "lint") {
        prompt = build_lint_prompt(load_rules(rules_path), netlist_text);
      } else if (task == "trojan") {
        if (log_path.empty()) throw Error("bad-args", "llm --task trojan needs --log");
        DetectConfig cfg;
        cfg.combine_mode = parse_mode(mode_str);
        prompt = build_trojan_prompt(cfg, {}, netlist_text, detail::read_file(log_path),
                                     parse_spec(spec_str));
      } else {
        throw Error("bad-args", "llm --task wants lint|trojan");
      }
      if (save_transcripts) detail::write_file("transcript.prompt.txt", prompt);

      std::string response;
      if (!response_path.empty()) {
        response = detail::read_file(response_path);
      } else if (!endpoint_path.empty()) {
        response = complete(prompt, endpoint_config_from_json(detail::read_file(endpoint_path)));
        if (save_transcripts) detail::write_file("transcript.response.txt", response);
      } else {
        out.emit(prompt);  // offline: the prompt itself is the product
        return 0;
      }

      if (task == "lint") {
        auto parsed = parse_bug_response(response);
        json j;
        j["findings"] = json::array();
        for (const auto& f : parsed.findings)
          j["findings"].push_back({{"rule_id", f.rule_id}, {"line", f.line_no}, {"message", f.message}});
        j["residue"] = parsed.residue;
        out.emit(j.dump(2) + "\n");
        return parsed.findings.empty() ? 0 : 1;
      }
      auto parsed = parse_trojan_response(response, n.node_names());
      json j;
      j["trojan_detected"] = parsed.trojan_detected;
      j["suspect_nodes"] = json::array();
      for (const auto& node : parsed.suspect_nodes) j["suspect_nodes"].push_back(node);
      j["suspect_components"] = json::array();
      for (const auto& c : parsed.suspect_components) j["suspect_components"].push_back(c);
      j["residue"] = parsed.residue;
      out.emit(j.dump(2) + "\n");
      return parsed.trojan_detected ? 1 : 0;
    }
  } catch (const Error& e) {
    std::cerr << "spicecheck: " << e.code() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "spicecheck: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
