#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spicecheck/detect.hpp"
#include "spicecheck/inject.hpp"
#include "spicecheck/lint.hpp"

namespace spicecheck {

// Undefined ratios (0/0) stay unset and render as "n/a"; they never skew
// averages.
struct MetricsSummary {
  int tp = 0, fp = 0, fn = 0;
  std::optional<double> bug_coverage_pct;
  std::optional<double> bug_resolved_pct;
  std::optional<double> fpr_pct;
  std::optional<bool> trojan_identified;
  std::optional<double> trojan_coverage_pct;
  std::optional<double> precision_pct;
  std::optional<double> recall_pct;
};

MetricsSummary bug_metrics(const InjectionRecord& truth, const BugReport& report,
                           const std::vector<LintFinding>& resolved,
                           const std::vector<LintFinding>& clean_findings);

MetricsSummary trojan_metrics(const InjectionRecord& truth, const DetectionReport& report);

struct AggregateRow {
  int rows = 0;
  std::optional<double> bug_coverage_pct;
  std::optional<double> bug_resolved_pct;
  std::optional<double> fpr_pct;
  std::optional<double> trojan_identified_pct;  // share of rows with a hit
  std::optional<double> trojan_coverage_pct;
  std::optional<double> precision_pct;
  std::optional<double> recall_pct;
};

// Arithmetic mean per metric over the rows where it is defined, rounded to
// two decimals.
AggregateRow aggregate(const std::vector<MetricsSummary>& rows);

// Truncating percentage renderers ("91.6", "14.28"); "n/a" when unset.
std::string format_pct(std::optional<double> value, int decimals);

std::string metrics_to_json(const MetricsSummary& m);

}  // namespace spicecheck
