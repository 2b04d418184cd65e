#include "spicecheck/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace spicecheck {

using json = nlohmann::ordered_json;

MetricsSummary bug_metrics(const InjectionRecord& truth, const BugReport& report,
                           const std::vector<LintFinding>& resolved,
                           const std::vector<LintFinding>& clean_findings) {
  if (truth.kind != InjectionKind::Bugs)
    throw Error("kind-mismatch", "bug_metrics needs a bug-injection record");

  std::set<std::pair<std::string, int>> truth_set(truth.bug_truth.begin(), truth.bug_truth.end());
  std::set<std::pair<std::string, int>> findings_set;
  for (const auto& f : report.findings) findings_set.insert({f.rule_id, f.line_no});
  std::set<std::pair<std::string, int>> preexisting;
  for (const auto& f : clean_findings) preexisting.insert({f.rule_id, f.line_no});

  std::set<std::pair<std::string, int>> matched;
  for (const auto& key : findings_set)
    if (truth_set.count(key)) matched.insert(key);

  MetricsSummary m;
  m.tp = static_cast<int>(matched.size());
  m.fn = static_cast<int>(truth_set.size() - matched.size());
  int false_findings = 0;
  for (const auto& key : findings_set)
    if (!truth_set.count(key) && !preexisting.count(key)) ++false_findings;
  m.fp = false_findings;

  if (!truth_set.empty())
    m.bug_coverage_pct = 100.0 * static_cast<double>(matched.size()) /
                         static_cast<double>(truth_set.size());
  if (!matched.empty()) {
    std::set<std::pair<std::string, int>> fixed;
    for (const auto& f : resolved) fixed.insert({f.rule_id, f.line_no});
    int fixed_matched = 0;
    for (const auto& key : matched)
      if (fixed.count(key)) ++fixed_matched;
    m.bug_resolved_pct =
        100.0 * static_cast<double>(fixed_matched) / static_cast<double>(matched.size());
  }
  if (!findings_set.empty())
    m.fpr_pct =
        100.0 * static_cast<double>(false_findings) / static_cast<double>(findings_set.size());
  else
    m.fpr_pct = 0.0;
  return m;
}

MetricsSummary trojan_metrics(const InjectionRecord& truth, const DetectionReport& report) {
  if (truth.kind != InjectionKind::Trojan)
    throw Error("kind-mismatch", "trojan_metrics needs a trojan-injection record");

  MetricsSummary m;
  int component_hits = 0;
  for (const auto& c : report.suspect_components)
    if (truth.trojan_components.count(c)) ++component_hits;
  if (!truth.trojan_components.empty())
    m.trojan_coverage_pct = 100.0 * static_cast<double>(component_hits) /
                            static_cast<double>(truth.trojan_components.size());
  m.trojan_identified = component_hits > 0;

  for (const auto& node : report.suspect_nodes) {
    if (truth.impacted_nodes.count(node)) ++m.tp;
    else ++m.fp;
  }
  for (const auto& node : truth.impacted_nodes)
    if (!report.suspect_nodes.count(node)) ++m.fn;

  if (m.tp + m.fp > 0)
    m.precision_pct = 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0)
    m.recall_pct = 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

std::optional<double> mean_of(const std::vector<MetricsSummary>& rows,
                              std::optional<double> MetricsSummary::*field) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if ((r.*field).has_value()) {
      sum += *(r.*field);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return round2(sum / count);
}

}  // namespace

AggregateRow aggregate(const std::vector<MetricsSummary>& rows) {
  if (rows.empty()) throw Error("empty-input", "aggregate needs at least one row");
  AggregateRow a;
  a.rows = static_cast<int>(rows.size());
  a.bug_coverage_pct = mean_of(rows, &MetricsSummary::bug_coverage_pct);
  a.bug_resolved_pct = mean_of(rows, &MetricsSummary::bug_resolved_pct);
  a.fpr_pct = mean_of(rows, &MetricsSummary::fpr_pct);
  a.trojan_coverage_pct = mean_of(rows, &MetricsSummary::trojan_coverage_pct);
  a.precision_pct = mean_of(rows, &MetricsSummary::precision_pct);
  a.recall_pct = mean_of(rows, &MetricsSummary::recall_pct);
  double hits = 0.0;
  int defined = 0;
  for (const auto& r : rows) {
    if (r.trojan_identified.has_value()) {
      hits += *r.trojan_identified ? 100.0 : 0.0;
      ++defined;
    }
  }
  if (defined > 0) a.trojan_identified_pct = round2(hits / defined);
  return a;
}

std::string format_pct(std::optional<double> value, int decimals) {
  if (!value.has_value()) return "n/a";
  double scale = std::pow(10.0, decimals);
  double truncated = std::trunc(*value * scale) / scale;
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(decimals);
  out << truncated;
  return out.str();
}

std::string metrics_to_json(const MetricsSummary& m) {
  json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v.has_value()) j[key] = *v;
    else j[key] = nullptr;
  };
  put("bug_coverage_pct", m.bug_coverage_pct);
  put("bug_resolved_pct", m.bug_resolved_pct);
  put("fpr_pct", m.fpr_pct);
  if (m.trojan_identified.has_value()) j["trojan_identified"] = *m.trojan_identified;
  else j["trojan_identified"] = nullptr;
  put("trojan_coverage_pct", m.trojan_coverage_pct);
  put("precision_pct", m.precision_pct);
  put("recall_pct", m.recall_pct);
  return j.dump(2) + "\n";
}

}  // namespace spicecheck
