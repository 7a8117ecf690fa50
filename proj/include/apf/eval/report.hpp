#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apf/eval/categorize.hpp"
#include "apf/eval/matching.hpp"
#include "apf/eval/metrics.hpp"
#include "apf/filter/filter.hpp"

namespace apf::eval {

/// Everything the report needs from one case: the matching of the
/// thresholded, unfiltered detections and the filter output of each method.
/// Filter records carry the overlap profile of every detection.
struct CaseRun {
  std::string case_id;
  Matching baseline;
  std::vector<filter::FilterResult> results;
};

struct ReportContext {
  std::string label = "run";
  double confidence_threshold = 0.8;
  double iou_threshold = kDefaultIouThreshold;
};

struct MethodColumn {
  std::optional<filter::Method> method;  // nullopt = no post-processing
  Metrics metrics;
  std::int64_t removed_fp = 0;
  std::int64_t removed_tp = 0;
  std::optional<double> fp_reduction_pct;
};

/// FP counts for one category (or subtotal): all baseline FPs and, per
/// method, how many of them the method removed.
struct CategoryRow {
  std::string name;
  std::int64_t all = 0;
  std::vector<std::int64_t> removed;  // parallel to Report::methods
};

struct Report {
  std::string label;
  double confidence_threshold = 0.8;
  double iou_threshold = kDefaultIouThreshold;
  std::int64_t n_cases = 0;
  std::int64_t total_gt = 0;
  std::vector<filter::Method> methods;
  std::vector<MethodColumn> columns;      // columns[0] is the unfiltered baseline
  std::vector<CategoryRow> categories;    // one row per FpCategory
  CategoryRow intracranial;
  CategoryRow extracranial;
  CategoryRow total;
  /// Extracranial FPs over all FPs and over intracranial FPs. Both are
  /// reported because both denominators are in common use.
  std::optional<double> extracranial_pct_of_all;
  std::optional<double> extracranial_pct_of_intracranial;
  /// Empty when every internal consistency check passes.
  std::vector<std::string> audit_failures;
};

/// Method columns are derived from the baseline matching: a method keeps a
/// TP while its detection survives, FN = total GT - TP, and FP = baseline
/// FPs that survive. Throws ValidationError when cases disagree on the
/// method set, or a filter result does not cover exactly the baseline detections.
Report build_report(const std::vector<CaseRun> &cases, const ReportContext &context = {});

} // namespace apf::eval
