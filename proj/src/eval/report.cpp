#include "apf/eval/report.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf::eval {

namespace {

std::vector<filter::Method> methods_of(const CaseRun &c) {
  std::vector<filter::Method> ms;
  for (const auto &r : c.results)
    ms.push_back(r.method);
  std::vector<filter::Method> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError(fmt::format("case '{}' lists a method more than once", c.case_id));
  return sorted;
}

CategoryRow make_row(std::string name, std::size_t n_methods) {
  return CategoryRow{std::move(name), 0, std::vector<std::int64_t>(n_methods, 0)};
}

} // namespace

Report build_report(const std::vector<CaseRun> &cases, const ReportContext &context) {
  if (cases.empty())
    throw ValidationError("report needs at least one case");

  Report rep;
  rep.label = context.label;
  rep.confidence_threshold = context.confidence_threshold;
  rep.iou_threshold = context.iou_threshold;
  rep.n_cases = static_cast<std::int64_t>(cases.size());
  rep.methods = methods_of(cases.front());
  const std::size_t nm = rep.methods.size();

  std::set<std::string> case_ids;
  for (const CaseRun &c : cases) {
    if (!case_ids.insert(c.case_id).second)
      throw ValidationError(fmt::format("case '{}' appears more than once", c.case_id));
    if (methods_of(c) != rep.methods)
      throw ValidationError(fmt::format("case '{}' was filtered with a different method set than case '{}'",
                                        c.case_id, cases.front().case_id));
  }

  std::int64_t base_tp = 0, base_fp = 0;
  std::vector<std::int64_t> tp_kept(nm, 0), fp_kept(nm, 0);
  for (const auto c : kAllCategories)
    rep.categories.push_back(make_row(category_name(c), nm));
  rep.intracranial = make_row("intracranial", nm);
  rep.extracranial = make_row("extracranial", nm);
  rep.total = make_row("total", nm);

  for (const CaseRun &c : cases) {
    const Matching &b = c.baseline;
    rep.total_gt += static_cast<std::int64_t>(b.tp() + b.fn());
    base_tp += static_cast<std::int64_t>(b.tp());
    base_fp += static_cast<std::int64_t>(b.fp());

    std::unordered_set<std::string> baseline_ids;
    for (const auto &p : b.pairs)
      baseline_ids.insert(p.detection_id);
    for (const auto &id : b.fp_ids)
      baseline_ids.insert(id);

    // profile and removal flags for every detection, checked across methods
    std::unordered_map<std::string, filter::OverlapProfile> profiles;
    std::vector<std::unordered_set<std::string>> removed(nm);
    for (const auto &result : c.results) {
      const auto slot = static_cast<std::size_t>(
          std::find(rep.methods.begin(), rep.methods.end(), result.method) - rep.methods.begin());
      std::unordered_set<std::string> seen;
      for (const auto &rec : result.records) {
        if (!baseline_ids.contains(rec.detection_id))
          throw ValidationError(fmt::format("case '{}': {} record for unknown detection '{}'", c.case_id,
                                            filter::method_name(result.method), rec.detection_id));
        if (!seen.insert(rec.detection_id).second)
          throw ValidationError(fmt::format("case '{}': duplicate {} record for detection '{}'", c.case_id,
                                            filter::method_name(result.method), rec.detection_id));
        auto [it, inserted] = profiles.emplace(rec.detection_id, rec.profile);
        if (!inserted && !(it->second == rec.profile))
          throw ValidationError(
              fmt::format("case '{}': overlap profile of '{}' differs between methods", c.case_id, rec.detection_id));
        if (rec.removed)
          removed[slot].insert(rec.detection_id);
      }
      if (seen.size() != baseline_ids.size())
        throw ValidationError(fmt::format("case '{}': {} covers {} detections, baseline has {}", c.case_id,
                                          filter::method_name(result.method), seen.size(), baseline_ids.size()));
    }

    for (std::size_t s = 0; s < nm; ++s) {
      for (const auto &p : b.pairs)
        if (!removed[s].contains(p.detection_id))
          ++tp_kept[s];
      for (const auto &id : b.fp_ids)
        if (!removed[s].contains(id))
          ++fp_kept[s];
    }

    if (nm == 0)
      continue;
    for (const auto &id : b.fp_ids) {
      const FpCategory cat = categorize_profile(profiles.at(id));
      CategoryRow &row = rep.categories[static_cast<std::size_t>(cat)];
      CategoryRow &sub = is_intracranial(cat) ? rep.intracranial : rep.extracranial;
      for (CategoryRow *r : {&row, &sub, &rep.total}) {
        ++r->all;
        for (std::size_t s = 0; s < nm; ++s)
          if (removed[s].contains(id))
            ++r->removed[s];
      }
    }
  }

  // Without filter results no profiles exist; only the total row is known.
  if (nm == 0)
    rep.total.all = base_fp;

  const std::int64_t base_fn = rep.total_gt - base_tp;
  MethodColumn none;
  none.metrics = metrics_from_counts(base_tp, base_fp, base_fn, rep.n_cases);
  rep.columns.push_back(none);
  for (std::size_t s = 0; s < nm; ++s) {
    MethodColumn col;
    col.method = rep.methods[s];
    col.metrics = metrics_from_counts(tp_kept[s], fp_kept[s], rep.total_gt - tp_kept[s], rep.n_cases);
    col.removed_fp = base_fp - fp_kept[s];
    col.removed_tp = base_tp - tp_kept[s];
    col.fp_reduction_pct = reduction_percentage(col.removed_fp, base_fp);
    rep.columns.push_back(col);
  }

  if (rep.total.all > 0) {
    rep.extracranial_pct_of_all = 100.0 * static_cast<double>(rep.extracranial.all) / static_cast<double>(rep.total.all);
  }
  if (rep.intracranial.all > 0) {
    rep.extracranial_pct_of_intracranial =
        100.0 * static_cast<double>(rep.extracranial.all) / static_cast<double>(rep.intracranial.all);
  }

  // self-audit
  for (const MethodColumn &col : rep.columns) {
    const std::string name = col.method ? filter::method_name(*col.method) : "None";
    if (col.metrics.tp + col.metrics.fn != rep.total_gt)
      rep.audit_failures.push_back(fmt::format("{}: TP + FN = {} but total GT = {}", name,
                                               col.metrics.tp + col.metrics.fn, rep.total_gt));
  }
  if (rep.total.all != base_fp)
    rep.audit_failures.push_back(fmt::format("category total {} != FP(None) {}", rep.total.all, base_fp));
  for (std::size_t s = 0; s < nm; ++s) {
    const MethodColumn &col = rep.columns[s + 1];
    const std::string name = filter::method_name(rep.methods[s]);
    if (rep.total.removed[s] != base_fp - col.metrics.fp)
      rep.audit_failures.push_back(fmt::format("{}: categories removed {} but FP(None) - FP = {}", name,
                                               rep.total.removed[s], base_fp - col.metrics.fp));
    std::int64_t sum = 0;
    for (const auto &row : rep.categories)
      sum += row.removed[s];
    if (sum != rep.total.removed[s] ||
        rep.intracranial.removed[s] + rep.extracranial.removed[s] != rep.total.removed[s])
      rep.audit_failures.push_back(fmt::format("{}: category subtotals do not add up", name));
  }
  return rep;
}

} // namespace apf::eval
