#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "apf/eval/matching.hpp"
#include "apf/eval/metrics.hpp"
#include "apf/eval/report.hpp"

namespace apf::io {

/// Output of `evaluate` for one case.
struct EvaluationDocument {
  std::string case_id;
  double iou_threshold = eval::kDefaultIouThreshold;
  std::optional<double> confidence_threshold;  // set when predictions were thresholded at evaluation
  eval::Metrics metrics;
  eval::Matching matching;
};

nlohmann::json evaluation_to_json(const EvaluationDocument &doc);
EvaluationDocument evaluation_from_json(const nlohmann::json &j, const std::string &source = "<evaluation>");
EvaluationDocument read_evaluation(const std::filesystem::path &path);
/// Header plus one row: case_id,tp,fp,fn,fp_per_case,sensitivity,iou_threshold
std::string evaluation_to_csv(const EvaluationDocument &doc);
/// CSV when the file name ends in ".csv", JSON otherwise.
void write_evaluation(const std::filesystem::path &path, const EvaluationDocument &doc);

nlohmann::json report_to_json(const eval::Report &report);
/// Rows TP, FP, FP/case, FN, sensitivity, removed FP, FP reduction %; one column per method.
std::string report_metrics_csv(const eval::Report &report);
/// Rows per category and subtotal; columns "all" then removed per method.
std::string report_categories_csv(const eval::Report &report);
/// Both tables as aligned plain text.
std::string render_report_text(const eval::Report &report);
/// report.json, metrics.csv, categories.csv and report.txt under `dir`.
void write_report(const std::filesystem::path &dir, const eval::Report &report);

} // namespace apf::io
