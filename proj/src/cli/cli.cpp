#include "apf/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "apf/core/errors.hpp"
#include "apf/eval/matching.hpp"
#include "apf/eval/report.hpp"
#include "apf/filter/filter.hpp"
#include "apf/io/case_dir.hpp"
#include "apf/io/config.hpp"
#include "apf/io/removal_log.hpp"
#include "apf/io/results.hpp"
#include "apf/phantom/phantom.hpp"
#include "apf/pipeline/mask_pipeline.hpp"
#include "apf/util/parallel.hpp"

namespace apf::cli {

namespace fs = std::filesystem;

namespace {

void configure_logging() {
  auto logger = spdlog::get("apf");
  if (!logger) {
    logger = spdlog::stderr_logger_mt("apf");
    logger->set_pattern("apf: %l: %v");
    spdlog::set_default_logger(logger);
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char *env = std::getenv("APF_LOG_LEVEL"); env && *env) {
    // from_str maps unknown names to "off"; only honour "off" when asked for
    const auto parsed = spdlog::level::from_str(env);
    if (parsed != spdlog::level::off || std::string_view(env) == "off")
      level = parsed;
  }
  logger->set_level(level);
}

struct GlobalOptions {
  std::string config_path;
  unsigned jobs = 0;
};

io::RunConfig load_config(const GlobalOptions &g) {
  return g.config_path.empty() ? io::RunConfig{} : io::read_config(g.config_path);
}

/// Use the flag value when it was given on the command line, else keep `target`.
template <typename T> void override_from(const CLI::Option *opt, const T &value, T &target) {
  if (opt->count() > 0)
    target = value;
}

// --- build-masks -----------------------------------------------------------

struct BuildMasksArgs {
  std::string case_dir, template_cvs, out;
  double brain_dilation_mm = 3.6, cvs_expand_mm = 3.2;
  bool invert = false, unexpanded_brain_box = false;
  CLI::Option *dilation_opt = nullptr, *expand_opt = nullptr;
};

int cmd_build_masks(const BuildMasksArgs &a, const GlobalOptions &g) {
  io::RunConfig cfg = load_config(g);
  override_from(a.dilation_opt, a.brain_dilation_mm, cfg.pipeline.brain_dilation_mm);
  override_from(a.expand_opt, a.cvs_expand_mm, cfg.pipeline.cvs_expand_mm);
  if (a.unexpanded_brain_box)
    cfg.pipeline.brain_uses_expanded_cvs_box = false;
  cfg.validate();

  fs::path template_path = a.template_cvs;
  if (template_path.empty())
    template_path = fs::path(a.case_dir) / "template_cvs.json";
  io::LoadedCase c = io::load_case(a.case_dir);
  const WorldBox template_box = io::read_world_box(template_path);
  const Affine4 transform = a.invert ? c.transform.inverse() : c.transform;
  pipeline::MaskSet masks =
      pipeline::build_mask_set(c.brain_seg, std::move(c.artery), c.vein, template_box, transform, cfg.pipeline);
  io::write_mask_set(a.out, c.paths.case_id, masks, cfg.pipeline);
  std::cout << fmt::format("{}: cvs region {} | brain {} | vein_final {} | cvs {} voxels\n", c.paths.case_id,
                           masks.cvs_region_box.to_string(), masks.brain.popcount(), masks.vein_final.popcount(),
                           masks.cvs.popcount());
  return kExitOk;
}

// --- filter ----------------------------------------------------------------

struct FilterArgs {
  std::string case_dir, masks_dir, method, out, log;
  double confidence_threshold = 0.8;
  std::int64_t m2_min_voxels = 1;
  CLI::Option *method_opt = nullptr, *threshold_opt = nullptr, *m2_opt = nullptr;
};

fs::path default_log_path(const fs::path &out) {
  fs::path p = out;
  return p.replace_extension("").string() + ".removal.jsonl";
}

int cmd_filter(const FilterArgs &a, const GlobalOptions &g) {
  io::RunConfig cfg = load_config(g);
  override_from(a.threshold_opt, a.confidence_threshold, cfg.pipeline.confidence_threshold);
  override_from(a.m2_opt, a.m2_min_voxels, cfg.m2_min_voxels);
  filter::Method method{};
  if (a.method_opt->count() > 0) {
    try {
      method = filter::parse_method(a.method);
    } catch (const InvalidArgument &e) {
      throw ValidationError(std::string("--method: ") + e.what());
    }
  } else if (cfg.methods.size() == 1) {
    method = cfg.methods.front();
  } else {
    throw ValidationError("--method is required (the configuration lists more than one method)");
  }
  cfg.validate();

  io::LoadedCase c = io::load_case(a.case_dir);
  pipeline::MaskSet masks = io::read_mask_set(a.masks_dir, std::move(c.artery));
  require_same_grid(c.brain_seg.geometry(), masks.geometry(), "case volumes vs mask set");

  const auto dets = filter::threshold_detections(c.detections.detections, cfg.pipeline.confidence_threshold);
  const filter::FilterResult result = filter::apply_method(dets, masks, method, {cfg.m2_min_voxels});

  const fs::path log_path = a.log.empty() ? default_log_path(a.out) : fs::path(a.log);
  io::write_detections(a.out, io::with_detections(c.detections, result.kept));
  io::write_removal_log(log_path, io::removal_log_records(c.paths.case_id, result));
  std::cout << fmt::format("{}: {} of {} detection(s) at confidence >= {} removed by {} ({} kept)\n",
                           c.paths.case_id, result.removed.size(), dets.size(), cfg.pipeline.confidence_threshold,
                           filter::method_name(method), result.kept.size());
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string pred, truth, out;
  double iou = eval::kDefaultIouThreshold;
  double confidence_threshold = 0.0;
  CLI::Option *iou_opt = nullptr, *threshold_opt = nullptr;
};

int cmd_evaluate(const EvaluateArgs &a, const GlobalOptions &g) {
  io::RunConfig cfg = load_config(g);
  override_from(a.iou_opt, a.iou, cfg.iou_threshold);
  cfg.validate();
  const io::DetectionDocument pred = io::read_detections(a.pred);
  const io::GroundTruthDocument truth = io::read_ground_truth(a.truth);
  if (pred.case_id != truth.case_id)
    throw ValidationError(
        fmt::format("prediction case '{}' does not match ground-truth case '{}'", pred.case_id, truth.case_id));

  io::EvaluationDocument doc;
  doc.case_id = pred.case_id;
  doc.iou_threshold = cfg.iou_threshold;
  std::vector<Detection> dets = pred.detections;
  if (a.threshold_opt->count() > 0) {
    dets = filter::threshold_detections(dets, a.confidence_threshold);
    doc.confidence_threshold = a.confidence_threshold;
  }
  doc.matching = eval::match_detections(dets, truth.boxes, cfg.iou_threshold);
  const eval::Matching one[] = {doc.matching};
  doc.metrics = eval::compute_metrics(one, 1);
  io::write_evaluation(a.out, doc);
  std::cout << fmt::format("{}: TP {} FP {} FN {} sensitivity {}\n", doc.case_id, doc.metrics.tp, doc.metrics.fp,
                           doc.metrics.fn,
                           doc.metrics.sensitivity_defined ? eval::format_fixed(doc.metrics.sensitivity, 3) : "n/a");
  return kExitOk;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

/// A run directory holds one sub-directory per case with evaluation.json
/// (the unfiltered, thresholded detections) and removal*.jsonl logs.
std::vector<eval::CaseRun> load_run(const fs::path &run_dir, unsigned jobs, eval::ReportContext &context) {
  if (!fs::is_directory(run_dir))
    throw IoError(fmt::format("run directory {} does not exist", run_dir.string()));
  std::vector<fs::path> case_dirs;
  for (const auto &entry : fs::directory_iterator(run_dir))
    if (entry.is_directory() && fs::is_regular_file(entry.path() / "evaluation.json"))
      case_dirs.push_back(entry.path());
  std::sort(case_dirs.begin(), case_dirs.end());
  if (case_dirs.empty())
    throw ValidationError(fmt::format("run directory {} contains no case with evaluation.json", run_dir.string()));

  std::vector<eval::CaseRun> cases(case_dirs.size());
  std::vector<io::EvaluationDocument> evals(case_dirs.size());
  util::parallel_for(case_dirs.size(), jobs, [&](std::size_t i) {
    const fs::path &dir = case_dirs[i];
    evals[i] = io::read_evaluation(dir / "evaluation.json");
    cases[i].case_id = evals[i].case_id;
    cases[i].baseline = evals[i].matching;
    std::vector<fs::path> logs;
    for (const auto &entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && name.rfind("removal", 0) == 0 && entry.path().extension() == ".jsonl")
        logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto &log : logs) {
      const auto records = io::read_removal_log(log);
      for (const auto &r : records)
        if (r.case_id != cases[i].case_id)
          throw ValidationError(fmt::format("{}: record for case '{}' in the directory of case '{}'", log.string(),
                                            r.case_id, cases[i].case_id));
      cases[i].results.push_back(io::filter_result_from_log(records));
    }
    std::sort(cases[i].results.begin(), cases[i].results.end(),
              [](const auto &x, const auto &y) { return x.method < y.method; });
  });

  context.iou_threshold = evals.front().iou_threshold;
  context.confidence_threshold = evals.front().confidence_threshold.value_or(context.confidence_threshold);
  for (const auto &e : evals)
    if (e.iou_threshold != context.iou_threshold ||
        e.confidence_threshold.value_or(context.confidence_threshold) != context.confidence_threshold)
      throw ValidationError(
          fmt::format("case '{}' in {} was evaluated with different thresholds", e.case_id, run_dir.string()));
  return cases;
}

int cmd_report(const ReportArgs &a, const GlobalOptions &g) {
  const io::RunConfig cfg = load_config(g);
  bool audit_ok = true;
  std::set<std::string> labels;
  for (const std::string &run : a.runs) {
    fs::path run_dir(run);
    if (!run_dir.has_filename())
      run_dir = run_dir.parent_path();
    eval::ReportContext context;
    context.label = run_dir.filename().string();
    context.confidence_threshold = cfg.pipeline.confidence_threshold;
    if (!labels.insert(context.label).second)
      throw ValidationError(fmt::format("two runs share the name '{}'", context.label));
    const auto cases = load_run(run_dir, g.jobs, context);
    const eval::Report report = eval::build_report(cases, context);
    std::cout << io::render_report_text(report) << "\n";
    for (std::size_t s = 1; s < report.columns.size(); ++s) {
      const auto &col = report.columns[s];
      std::cout << fmt::format("{} {}: removed {} of {} FP ({}%)\n", report.label, filter::method_name(*col.method),
                               col.removed_fp, report.columns[0].metrics.fp,
                               col.fp_reduction_pct ? eval::format_fixed(*col.fp_reduction_pct, 1) : "n/a");
    }
    // without --out, a config file's output_dir decides; with neither, print only
    const fs::path out = !a.out.empty() ? fs::path(a.out) : g.config_path.empty() ? fs::path() : cfg.output_dir;
    if (!out.empty())
      io::write_report(a.runs.size() == 1 ? out : out / context.label, report);
    audit_ok = audit_ok && report.audit_failures.empty();
  }
  if (!audit_ok)
    throw ValidationError("report consistency checks failed");
  return kExitOk;
}

// --- phantom ---------------------------------------------------------------

struct PhantomArgs {
  std::string spec, out, variant = "base", write_spec;
  std::uint64_t seed = 0;
  std::size_t count = 1;
};

int cmd_phantom(const PhantomArgs &a, const GlobalOptions &g) {
  phantom::PhantomVariant variant = phantom::PhantomVariant::Base;
  if (a.variant == "vein-touching")
    variant = phantom::PhantomVariant::VeinTouchingAneurysm;
  else if (a.variant != "base")
    throw ValidationError(fmt::format("--variant must be 'base' or 'vein-touching', got '{}'", a.variant));
  if (a.count < 1)
    throw ValidationError("--count must be at least 1");

  std::optional<phantom::PhantomSpec> fixed_spec;
  if (!a.spec.empty())
    fixed_spec = io::read_phantom_spec(a.spec);

  // with --count N the cases go to <out>/phantom-000 ... and use seeds seed..seed+N-1
  std::vector<fs::path> dirs;
  for (std::size_t i = 0; i < a.count; ++i)
    dirs.push_back(a.count == 1 ? fs::path(a.out) : fs::path(a.out) / fmt::format("phantom-{:03}", i));
  std::vector<std::size_t> sizes(a.count);
  util::parallel_for(a.count, g.jobs, [&](std::size_t i) {
    const std::uint64_t seed = a.seed + i;
    const phantom::PhantomSpec spec = fixed_spec ? *fixed_spec : phantom::default_phantom_spec(variant, seed);
    const phantom::PhantomCase pc = phantom::generate_phantom(spec, seed);
    io::write_phantom_case(dirs[i], pc);
    if (!a.write_spec.empty() && i == 0)
      io::write_phantom_spec(a.write_spec, spec);
    sizes[i] = pc.detections.size();
  });
  for (std::size_t i = 0; i < a.count; ++i)
    std::cout << fmt::format("{}: seed {} with {} detection(s)\n", dirs[i].string(), a.seed + i, sizes[i]);
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string> &args) {
  configure_logging();

  CLI::App app{"Anatomy-based false-positive filtering for aneurysm detections", "apf"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--config", global.config_path, "Key-value configuration file supplying defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--jobs", global.jobs, "Worker threads for multi-case work (0 = one per processor)");

  BuildMasksArgs bm;
  auto *build = app.add_subcommand("build-masks", "Derive brain, vein_final and CVS masks for a case");
  build->add_option("--case", bm.case_dir, "Case directory")->required();
  build->add_option("--template-cvs", bm.template_cvs,
                    "Template CVS box (default: template_cvs.json in the case directory)");
  bm.dilation_opt = build->add_option("--brain-dilation-mm", bm.brain_dilation_mm, "Brain mask dilation radius");
  bm.expand_opt = build->add_option("--cvs-expand-mm", bm.cvs_expand_mm, "CVS region box margin");
  build->add_flag("--invert", bm.invert, "The transform maps target to template; invert it first");
  build->add_flag("--unexpanded-brain-box", bm.unexpanded_brain_box,
                  "Add the registered CVS box before expansion to the brain mask");
  build->add_option("--out", bm.out, "Output directory")->required();

  FilterArgs fa;
  auto *filt = app.add_subcommand("filter", "Remove detections with one of methods 1-5");
  filt->add_option("--case", fa.case_dir, "Case directory")->required();
  filt->add_option("--masks", fa.masks_dir, "Directory written by build-masks")->required();
  fa.method_opt = filt->add_option("--method", fa.method, "Method 1-5");
  fa.threshold_opt = filt->add_option("--confidence-threshold", fa.confidence_threshold,
                                      "Drop detections below this confidence first");
  fa.m2_opt = filt->add_option("--m2-min-voxels", fa.m2_min_voxels, "Vein voxels needed for method 2");
  filt->add_option("--out", fa.out, "Filtered detections file")->required();
  filt->add_option("--log", fa.log, "Removal log (default: <out>.removal.jsonl)");

  EvaluateArgs ea;
  auto *evaluate = app.add_subcommand("evaluate", "Match detections to ground truth");
  evaluate->add_option("--pred", ea.pred, "Detections file")->required();
  evaluate->add_option("--truth", ea.truth, "Ground-truth file")->required();
  ea.iou_opt = evaluate->add_option("--iou", ea.iou, "Minimum IoU for a match");
  ea.threshold_opt = evaluate->add_option("--confidence-threshold", ea.confidence_threshold,
                                          "Drop predictions below this confidence before matching");
  evaluate->add_option("--out", ea.out, "Metrics file (.csv for CSV, JSON otherwise)")->required();

  ReportArgs ra;
  auto *report = app.add_subcommand("report", "Aggregate evaluated and filtered runs into tables");
  report->add_option("--runs", ra.runs, "Run directories")->required()->expected(1, -1);
  report->add_option("--out", ra.out, "Directory for report.json and CSV tables (default: output_dir from --config)");

  PhantomArgs pa;
  auto *ph = app.add_subcommand("phantom", "Write a synthetic case");
  ph->add_option("--spec", pa.spec, "Phantom spec JSON (default: built-in layout shifted by the seed)");
  ph->add_option("--seed", pa.seed, "Random seed");
  ph->add_option("--variant", pa.variant, "Built-in layout: base or vein-touching");
  ph->add_option("--count", pa.count, "Number of cases (written to <out>/phantom-NNN when > 1)");
  ph->add_option("--write-spec", pa.write_spec, "Also save the spec used (first case)");
  ph->add_option("--out", pa.out, "Output case directory")->required();

  std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(argv_rest);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e, std::cout, std::cerr);
    return kExitValidation;
  }

  auto fail = [](int code, const std::exception &e) {
    std::cerr << "apf: error: " << e.what() << "\n";
    return code;
  };
  try {
    if (*build)
      return cmd_build_masks(bm, global);
    if (*filt)
      return cmd_filter(fa, global);
    if (*evaluate)
      return cmd_evaluate(ea, global);
    if (*report)
      return cmd_report(ra, global);
    if (*ph)
      return cmd_phantom(pa, global);
  } catch (const ValidationError &e) {
    return fail(kExitValidation, e);
  } catch (const GeometryMismatch &e) {
    return fail(kExitValidation, e);
  } catch (const InvalidTransform &e) {
    return fail(kExitValidation, e);
  } catch (const InvalidArgument &e) {
    return fail(kExitValidation, e);
  } catch (const ParseError &e) {
    return fail(kExitIo, e);
  } catch (const IoError &e) {
    return fail(kExitIo, e);
  } catch (const fs::filesystem_error &e) {
    return fail(kExitIo, e);
  } catch (const std::exception &e) {
    return fail(kExitIo, e);
  }
  return kExitValidation;
}

} // namespace apf::cli
