#include "apf/io/results.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "apf/core/errors.hpp"
#include "apf/io/atomic_file.hpp"

namespace apf::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json metrics_json(const eval::Metrics &m) {
  return json{{"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn},
              {"n_cases", m.n_cases},
              {"fp_per_case", m.fp_per_case},
              {"fp_per_case_display", eval::format_fixed(m.fp_per_case, 2)},
              {"sensitivity", m.sensitivity},
              {"sensitivity_defined", m.sensitivity_defined}};
}

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

std::string column_name(const eval::MethodColumn &c) { return c.method ? filter::method_name(*c.method) : "None"; }

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s)
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string pct_text(const std::optional<double> &v) {
  return v ? eval::format_fixed(*v, 1) : std::string("n/a");
}

} // namespace

json evaluation_to_json(const EvaluationDocument &doc) {
  json pairs = json::array();
  for (const auto &p : doc.matching.pairs)
    pairs.push_back({{"detection_id", p.detection_id}, {"ground_truth_id", p.ground_truth_id}, {"iou", p.iou}});
  return json{{"case_id", doc.case_id},
              {"iou_threshold", doc.iou_threshold},
              {"confidence_threshold", optional_json(doc.confidence_threshold)},
              {"metrics", metrics_json(doc.metrics)},
              {"matching", {{"pairs", pairs}, {"fp_ids", doc.matching.fp_ids}, {"fn_ids", doc.matching.fn_ids}}}};
}

EvaluationDocument evaluation_from_json(const json &j, const std::string &source) {
  auto fail = [&](const std::string &msg) -> ParseError { return ParseError(fmt::format("{}: {}", source, msg)); };
  try {
    if (!j.is_object())
      throw fail("top level must be an object");
    EvaluationDocument doc;
    doc.case_id = j.at("case_id").get<std::string>();
    doc.iou_threshold = j.at("iou_threshold").get<double>();
    if (auto c = j.find("confidence_threshold"); c != j.end() && !c->is_null())
      doc.confidence_threshold = c->get<double>();
    const json &m = j.at("matching");
    for (const json &p : m.at("pairs"))
      doc.matching.pairs.push_back(
          {p.at("detection_id").get<std::string>(), p.at("ground_truth_id").get<std::string>(), p.at("iou").get<double>()});
    doc.matching.fp_ids = m.at("fp_ids").get<std::vector<std::string>>();
    doc.matching.fn_ids = m.at("fn_ids").get<std::vector<std::string>>();
    // metrics are recomputed from the matching rather than trusted
    doc.metrics = eval::metrics_from_counts(static_cast<std::int64_t>(doc.matching.tp()),
                                            static_cast<std::int64_t>(doc.matching.fp()),
                                            static_cast<std::int64_t>(doc.matching.fn()), 1);
    return doc;
  } catch (const json::exception &e) {
    throw fail(std::string("malformed evaluation document: ") + e.what());
  }
}

EvaluationDocument read_evaluation(const fs::path &path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error &e) {
    throw ParseError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()), static_cast<long long>(e.byte));
  }
  return evaluation_from_json(j, path.string());
}

std::string evaluation_to_csv(const EvaluationDocument &doc) {
  const auto &m = doc.metrics;
  return fmt::format("case_id,tp,fp,fn,fp_per_case,sensitivity,iou_threshold\n{},{},{},{},{},{},{}\n",
                     csv_field(doc.case_id), m.tp, m.fp, m.fn, eval::format_fixed(m.fp_per_case, 2),
                     m.sensitivity_defined ? eval::format_fixed(m.sensitivity, 4) : std::string("n/a"),
                     doc.iou_threshold);
}

void write_evaluation(const fs::path &path, const EvaluationDocument &doc) {
  if (path.extension() == ".csv")
    write_text_atomically(path, evaluation_to_csv(doc));
  else
    write_text_atomically(path, evaluation_to_json(doc).dump(2) + "\n");
}

// --- reports -------------------------------------------------------------

json report_to_json(const eval::Report &r) {
  json columns = json::array();
  for (const auto &c : r.columns)
    columns.push_back({{"method", column_name(c)},
                       {"metrics", metrics_json(c.metrics)},
                       {"removed_fp", c.removed_fp},
                       {"removed_tp", c.removed_tp},
                       {"fp_reduction_pct", optional_json(c.fp_reduction_pct)}});
  auto row_json = [](const eval::CategoryRow &row) {
    return json{{"name", row.name}, {"all", row.all}, {"removed", row.removed}};
  };
  json categories = json::array();
  for (const auto &row : r.categories)
    categories.push_back(row_json(row));
  json methods = json::array();
  for (filter::Method m : r.methods)
    methods.push_back(filter::method_name(m));
  return json{{"label", r.label},
              {"confidence_threshold", r.confidence_threshold},
              {"iou_threshold", r.iou_threshold},
              {"n_cases", r.n_cases},
              {"total_gt", r.total_gt},
              {"methods", methods},
              {"columns", columns},
              {"categories", categories},
              {"intracranial", row_json(r.intracranial)},
              {"extracranial", row_json(r.extracranial)},
              {"total", row_json(r.total)},
              {"extracranial_pct_of_all", optional_json(r.extracranial_pct_of_all)},
              {"extracranial_pct_of_intracranial", optional_json(r.extracranial_pct_of_intracranial)},
              {"audit_failures", r.audit_failures}};
}

std::string report_metrics_csv(const eval::Report &r) {
  std::string out = "row";
  for (const auto &c : r.columns)
    out += "," + column_name(c);
  out += "\n";
  auto line = [&](const char *name, auto cell) {
    out += name;
    for (const auto &c : r.columns)
      out += "," + cell(c);
    out += "\n";
  };
  line("tp", [](const eval::MethodColumn &c) { return std::to_string(c.metrics.tp); });
  line("fp", [](const eval::MethodColumn &c) { return std::to_string(c.metrics.fp); });
  line("fp_per_case", [](const eval::MethodColumn &c) { return eval::format_fixed(c.metrics.fp_per_case, 2); });
  line("fn", [](const eval::MethodColumn &c) { return std::to_string(c.metrics.fn); });
  line("sensitivity", [](const eval::MethodColumn &c) {
    return c.metrics.sensitivity_defined ? eval::format_fixed(c.metrics.sensitivity, 4) : std::string("n/a");
  });
  line("removed_fp", [](const eval::MethodColumn &c) { return std::to_string(c.removed_fp); });
  line("removed_tp", [](const eval::MethodColumn &c) { return std::to_string(c.removed_tp); });
  line("fp_reduction_pct", [](const eval::MethodColumn &c) {
    return c.method ? pct_text(c.fp_reduction_pct) : std::string();
  });
  return out;
}

std::string report_categories_csv(const eval::Report &r) {
  std::string out = "category,all";
  for (filter::Method m : r.methods)
    out += ",removed_" + filter::method_name(m);
  out += "\n";
  auto row = [&](const eval::CategoryRow &c) {
    out += csv_field(c.name) + "," + std::to_string(c.all);
    for (auto v : c.removed)
      out += "," + std::to_string(v);
    out += "\n";
  };
  for (const auto &c : r.categories)
    row(c);
  row(r.intracranial);
  row(r.extracranial);
  row(r.total);
  return out;
}

std::string render_report_text(const eval::Report &r) {
  std::string out = fmt::format("Report {}: {} case(s), {} annotated aneurysm(s), confidence >= {}, IoU >= {}\n\n",
                                r.label, r.n_cases, r.total_gt, r.confidence_threshold, r.iou_threshold);
  out += fmt::format("{:<14}", "");
  for (const auto &c : r.columns)
    out += fmt::format("{:>14}", column_name(c));
  out += "\n";
  auto line = [&](const char *name, auto cell) {
    out += fmt::format("{:<14}", name);
    for (const auto &c : r.columns)
      out += fmt::format("{:>14}", cell(c));
    out += "\n";
  };
  line("TP", [](const eval::MethodColumn &c) { return std::to_string(c.metrics.tp); });
  line("FP (per case)", [](const eval::MethodColumn &c) {
    return fmt::format("{} ({})", c.metrics.fp, eval::format_fixed(c.metrics.fp_per_case, 2));
  });
  line("FN", [](const eval::MethodColumn &c) { return std::to_string(c.metrics.fn); });
  line("Sensitivity", [](const eval::MethodColumn &c) {
    return c.metrics.sensitivity_defined ? eval::format_fixed(c.metrics.sensitivity, 3) : std::string("n/a");
  });
  line("Removed FP", [](const eval::MethodColumn &c) {
    return c.method ? std::to_string(c.removed_fp) : std::string("-");
  });
  line("Reduction %", [](const eval::MethodColumn &c) {
    return c.method ? pct_text(c.fp_reduction_pct) : std::string("-");
  });

  out += fmt::format("\n{:<14}{:>8}", "FP category", "All");
  for (filter::Method m : r.methods)
    out += fmt::format("{:>8}", filter::method_name(m));
  out += "\n";
  auto row = [&](const eval::CategoryRow &c) {
    out += fmt::format("{:<14}{:>8}", c.name, c.all);
    for (auto v : c.removed)
      out += fmt::format("{:>8}", v);
    out += "\n";
  };
  for (const auto &c : r.categories)
    row(c);
  row(r.intracranial);
  row(r.extracranial);
  row(r.total);
  out += fmt::format("\nExtracranial FPs: {}% of all FPs, {}% of intracranial FPs\n",
                     pct_text(r.extracranial_pct_of_all), pct_text(r.extracranial_pct_of_intracranial));
  if (r.audit_failures.empty())
    out += "Consistency checks: all passed\n";
  else
    for (const auto &f : r.audit_failures)
      out += "Consistency check FAILED: " + f + "\n";
  return out;
}

void write_report(const fs::path &dir, const eval::Report &report) {
  write_text_atomically(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text_atomically(dir / "metrics.csv", report_metrics_csv(report));
  write_text_atomically(dir / "categories.csv", report_categories_csv(report));
  write_text_atomically(dir / "report.txt", render_report_text(report));
}

} // namespace apf::io
