#include <algorithm>
#include <map>
#include <random>
#include <optional>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "apf/core/errors.hpp"
#include "apf/eval/categorize.hpp"
#include "apf/eval/matching.hpp"
#include "apf/eval/metrics.hpp"
#include "apf/eval/report.hpp"
#include "table_fixture.hpp"
#include "test_support.hpp"

namespace apf::eval {
namespace {

using filter::Method;
using filter::OverlapProfile;

// Plain voxel counting, independent of the closed form used by box_iou.
double counted_iou(const VoxelBox &a, const VoxelBox &b) {
  std::int64_t inter = 0;
  const Index3 lo{std::min(a.min()[0], b.min()[0]), std::min(a.min()[1], b.min()[1]), std::min(a.min()[2], b.min()[2])};
  const Index3 hi{std::max(a.max()[0], b.max()[0]), std::max(a.max()[1], b.max()[1]), std::max(a.max()[2], b.max()[2])};
  for (std::int64_t z = lo[2]; z < hi[2]; ++z)
    for (std::int64_t y = lo[1]; y < hi[1]; ++y)
      for (std::int64_t x = lo[0]; x < hi[0]; ++x)
        if (a.contains({x, y, z}) && b.contains({x, y, z}))
          ++inter;
  return double(inter) / double(a.volume() + b.volume() - inter);
}

TEST(BoxIou, Examples) {
  const VoxelBox a({0, 0, 0}, {2, 2, 2});
  EXPECT_DOUBLE_EQ(box_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(box_iou(a, VoxelBox({1, 0, 0}, {3, 2, 2})), 4.0 / 12.0);
  EXPECT_DOUBLE_EQ(box_iou(VoxelBox({0, 0, 0}, {4, 4, 4}), VoxelBox({2, 2, 2}, {6, 6, 6})), 8.0 / 120.0);
  EXPECT_DOUBLE_EQ(box_iou(a, VoxelBox({2, 0, 0}, {4, 2, 2})), 0.0);
  EXPECT_THROW(box_iou(a, VoxelBox::empty()), InvalidArgument);
}

TEST(BoxIou, MatchesCountingAndIsSymmetric) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const VoxelBox a = testing::random_box(rng, {10, 10, 10}, 0);
    const VoxelBox b = testing::random_box(rng, {10, 10, 10}, 0);
    if (a.is_empty() || b.is_empty())
      continue;
    const double iou = box_iou(a, b);
    EXPECT_NEAR(iou, counted_iou(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(iou, box_iou(b, a));
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0);
  }
}

TEST(CenterInside, BoundaryInclusive) {
  const VoxelBox gt({0, 0, 0}, {4, 4, 4});
  EXPECT_TRUE(center_inside(VoxelBox({1, 1, 1}, {3, 3, 3}), gt));
  EXPECT_TRUE(center_inside(VoxelBox({3, 3, 3}, {5, 5, 5}), gt));   // centre (4,4,4) on the face
  EXPECT_FALSE(center_inside(VoxelBox({4, 3, 3}, {6, 5, 5}), gt));  // centre x = 5
  EXPECT_FALSE(center_inside(VoxelBox({-3, 0, 0}, {-1, 2, 2}), gt));
}

TEST(Matching, SimpleScene) {
  const std::vector<GroundTruthBox> gts{{"g1", VoxelBox({0, 0, 0}, {4, 4, 4})},
                                        {"g2", VoxelBox({10, 10, 10}, {14, 14, 14})},
                                        {"g3", VoxelBox({20, 0, 0}, {24, 4, 4})}};
  const std::vector<Detection> dets{{"d1", VoxelBox({0, 0, 0}, {4, 4, 4}), 0.9},
                                    {"d2", VoxelBox({1, 0, 0}, {5, 4, 4}), 0.9},     // second hit on g1
                                    {"d3", VoxelBox({10, 10, 10}, {13, 14, 14}), 0.9},
                                    {"d4", VoxelBox({30, 30, 30}, {32, 32, 32}), 0.9}};
  const Matching m = match_detections(dets, gts);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0], (MatchPair{"d1", "g1", 1.0}));
  EXPECT_EQ(m.pairs[1].detection_id, "d3");
  EXPECT_DOUBLE_EQ(m.pairs[1].iou, 0.75);
  EXPECT_EQ(m.fp_ids, (std::vector<std::string>{"d2", "d4"}));
  EXPECT_EQ(m.fn_ids, (std::vector<std::string>{"g3"}));
}

TEST(Matching, ThresholdAndCentreRule) {
  const std::vector<GroundTruthBox> gts{{"g", VoxelBox({0, 0, 0}, {4, 4, 4})}};
  // IoU 8/120 < 0.3 even though the centre (4,4,4) is inside
  const std::vector<Detection> low{{"d", VoxelBox({2, 2, 2}, {6, 6, 6}), 1.0}};
  EXPECT_EQ(match_detections(low, gts).tp(), 0u);
  EXPECT_EQ(match_detections(low, gts, 0.05).tp(), 1u);
  // a large box covering the GT has its centre outside it
  const std::vector<Detection> off{{"d", VoxelBox({0, 0, 0}, {10, 4, 4}), 1.0}};
  EXPECT_EQ(match_detections(off, gts, 0.0).tp(), 0u);
  EXPECT_THROW(match_detections(low, gts, 1.5), InvalidArgument);
}

TEST(Matching, DuplicateIdsRejected) {
  const VoxelBox b({0, 0, 0}, {2, 2, 2});
  EXPECT_THROW(match_detections({{"a", b, 1}, {"a", b, 1}}, {}), ValidationError);
  EXPECT_THROW(match_detections({}, {{"g", b}, {"g", b}}), ValidationError);
}

TEST(Matching, EmptyInputs) {
  const VoxelBox b({0, 0, 0}, {2, 2, 2});
  EXPECT_EQ(match_detections({}, {{"g", b}}).fn_ids, std::vector<std::string>{"g"});
  EXPECT_EQ(match_detections({{"d", b, 1}}, {}).fp_ids, std::vector<std::string>{"d"});
}

// Repeatedly takes the best remaining admissible pair by scanning the full
// det x gt table; equivalent by definition to the greedy rule.
std::vector<MatchPair> oracle_greedy(const std::vector<Detection> &dets, const std::vector<GroundTruthBox> &gts,
                                     double tau) {
  std::vector<bool> used_d(dets.size()), used_g(gts.size());
  std::vector<MatchPair> out;
  for (;;) {
    std::optional<MatchPair> best;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < dets.size(); ++i)
      for (std::size_t j = 0; j < gts.size(); ++j) {
        if (used_d[i] || used_g[j] || !center_inside(dets[i].box, gts[j].box))
          continue;
        const double iou = counted_iou(dets[i].box, gts[j].box);
        if (iou < tau)
          continue;
        const MatchPair cand{dets[i].id, gts[j].id, iou};
        auto key = [](const MatchPair &p) { return std::tuple(-p.iou, p.detection_id, p.ground_truth_id); };
        if (!best || key(cand) < key(*best)) {
          best = cand;
          bi = i;
          bj = j;
        }
      }
    if (!best)
      return out;
    used_d[bi] = used_g[bj] = true;
    out.push_back(*best);
  }
}

TEST(Matching, AgreesWithOracleOnRandomScenes) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<GroundTruthBox> gts;
    std::vector<Detection> dets;
    const int ng = testing::uniform_int(rng, 0, 5), nd = testing::uniform_int(rng, 0, 5);
    auto near_box = [&] {
      const Index3 lo{testing::uniform_int(rng, 0, 5), testing::uniform_int(rng, 0, 5), testing::uniform_int(rng, 0, 5)};
      return VoxelBox(lo, {lo[0] + testing::uniform_int(rng, 1, 5), lo[1] + testing::uniform_int(rng, 1, 5),
                           lo[2] + testing::uniform_int(rng, 1, 5)});
    };
    for (int j = 0; j < ng; ++j)
      gts.push_back({"g" + std::to_string(j), near_box()});
    for (int i = 0; i < nd; ++i)
      dets.push_back({"d" + std::to_string(i), near_box(), 0.9});
    const double tau = trial % 3 == 0 ? 0.0 : 0.3;
    const Matching m = match_detections(dets, gts, tau);
    const auto expected = oracle_greedy(dets, gts, tau);
    ASSERT_EQ(m.pairs.size(), expected.size()) << "trial " << trial;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      EXPECT_EQ(m.pairs[k].detection_id, expected[k].detection_id);
      EXPECT_EQ(m.pairs[k].ground_truth_id, expected[k].ground_truth_id);
      EXPECT_NEAR(m.pairs[k].iou, expected[k].iou, 1e-12);
    }
    // partition of both id sets
    EXPECT_EQ(m.tp() + m.fp(), dets.size());
    EXPECT_EQ(m.tp() + m.fn(), gts.size());
    std::set<std::string> dset, gset;
    for (const auto &p : m.pairs) {
      EXPECT_TRUE(dset.insert(p.detection_id).second);
      EXPECT_TRUE(gset.insert(p.ground_truth_id).second);
    }
    for (const auto &id : m.fp_ids)
      EXPECT_TRUE(dset.insert(id).second);
    for (const auto &id : m.fn_ids)
      EXPECT_TRUE(gset.insert(id).second);
  }
}

TEST(Metrics, ReferenceFpPerCase) {
  const std::map<std::int64_t, std::string> expected{{126, "0.88"}, {182, "1.27"}, {37, "0.26"}, {88, "0.62"},
                                                     {98, "0.69"},  {43, "0.30"},  {48, "0.34"}, {33, "0.23"},
                                                     {104, "0.73"}, {116, "0.81"}, {79, "0.55"}};
  for (const auto &[fp, text] : expected) {
    const Metrics m = metrics_from_counts(139, fp, 79, 143);
    EXPECT_EQ(format_fixed(m.fp_per_case, 2), text) << fp;
  }
}

TEST(Metrics, SensitivityAndValidation) {
  const Metrics m = metrics_from_counts(139, 126, 79, 143);
  EXPECT_EQ(m.tp + m.fn, 218);
  EXPECT_TRUE(m.sensitivity_defined);
  EXPECT_DOUBLE_EQ(m.sensitivity, 139.0 / 218.0);
  const Metrics none = metrics_from_counts(0, 3, 0, 2);
  EXPECT_FALSE(none.sensitivity_defined);
  EXPECT_DOUBLE_EQ(none.fp_per_case, 1.5);
  EXPECT_THROW(metrics_from_counts(1, 1, 1, 0), InvalidArgument);
  EXPECT_THROW(metrics_from_counts(-1, 1, 1, 1), InvalidArgument);
}

TEST(Metrics, ComputeSumsMatchings) {
  Matching a, b;
  a.pairs = {{"d1", "g1", 0.5}};
  a.fp_ids = {"d2", "d3"};
  b.fn_ids = {"g9"};
  const std::vector<Matching> ms{a, b};
  const Metrics m = compute_metrics(ms, 2);
  EXPECT_EQ(m.tp, 1);
  EXPECT_EQ(m.fp, 2);
  EXPECT_EQ(m.fn, 1);
  EXPECT_DOUBLE_EQ(m.fp_per_case, 1.0);
}

TEST(Rounding, HalfUp) {
  EXPECT_DOUBLE_EQ(round_half_up(0.125, 2), 0.13);
  EXPECT_DOUBLE_EQ(round_half_up(0.135, 2), 0.14);
  EXPECT_DOUBLE_EQ(round_half_up(70.63492, 1), 70.6);
  EXPECT_DOUBLE_EQ(round_half_up(2.5, 0), 3.0);
  EXPECT_EQ(format_fixed(0.3, 2), "0.30");
  EXPECT_EQ(format_fixed(51.648, 1), "51.6");
}

TEST(Reduction, Percentages) {
  EXPECT_EQ(format_fixed(*reduction_percentage(89, 126), 1), "70.6");
  EXPECT_EQ(format_fixed(*reduction_percentage(94, 182), 1), "51.6");
  EXPECT_DOUBLE_EQ(*reduction_percentage(0, 7), 0.0);
  EXPECT_DOUBLE_EQ(*reduction_percentage(7, 7), 100.0);
  EXPECT_FALSE(reduction_percentage(0, 0).has_value());
  EXPECT_THROW(reduction_percentage(8, 7), InvalidArgument);
  EXPECT_THROW(reduction_percentage(-1, 7), InvalidArgument);
}

TEST(Categorize, Rules) {
  EXPECT_EQ(categorize_profile({0, 5, 9, 9, 10}), FpCategory::Extracranial);
  EXPECT_EQ(categorize_profile({5, 1, 2, 3, 10}), FpCategory::Cvs);
  EXPECT_EQ(categorize_profile({5, 3, 1, 3, 10}), FpCategory::Cvs);  // tie goes to cvs
  EXPECT_EQ(categorize_profile({5, 4, 1, 2, 10}), FpCategory::Arterial);
  EXPECT_EQ(categorize_profile({5, 1, 2, 0, 10}), FpCategory::Venous);
  EXPECT_EQ(categorize_profile({5, 2, 2, 0, 10}), FpCategory::Arterial);
  EXPECT_EQ(categorize_profile({5, 0, 0, 0, 10}), FpCategory::Nonvascular);
  for (auto c : kAllCategories)
    EXPECT_EQ(parse_category(category_name(c)), c);
  EXPECT_THROW(parse_category("bone"), InvalidArgument);
}

const MethodColumn &column(const Report &r, Method m) {
  for (const auto &c : r.columns)
    if (c.method == m)
      return c;
  throw std::logic_error("missing column");
}

void expect_clean_audit(const Report &r) {
  EXPECT_TRUE(r.audit_failures.empty()) << r.audit_failures.front();
  for (const auto &c : r.columns)
    EXPECT_EQ(c.metrics.tp + c.metrics.fn, r.total_gt);
}

TEST(Report, FirstModelShapedRun) {
  const Report r = build_report(testing::build_synthetic_run(testing::first_model_run()));
  expect_clean_audit(r);
  EXPECT_EQ(r.n_cases, 143);
  EXPECT_EQ(r.total_gt, 218);
  EXPECT_EQ(r.columns[0].metrics.fp, 126);
  EXPECT_EQ(format_fixed(r.columns[0].metrics.fp_per_case, 2), "0.88");
  const std::vector<std::int64_t> fp{98, 43, 48, 33, 37}, tp{139, 129, 139, 129, 139};
  for (std::size_t k = 0; k < 5; ++k) {
    const MethodColumn &c = column(r, filter::kAllMethods[k]);
    EXPECT_EQ(c.metrics.fp, fp[k]);
    EXPECT_EQ(c.metrics.tp, tp[k]);
    EXPECT_EQ(c.removed_fp, 126 - fp[k]);
    EXPECT_EQ(r.total.removed[k], 126 - fp[k]);
  }
  const MethodColumn &m5 = column(r, Method::M5);
  EXPECT_EQ(m5.removed_fp, 89);
  EXPECT_EQ(format_fixed(*m5.fp_reduction_pct, 1), "70.6");
  EXPECT_EQ(format_fixed(m5.metrics.fp_per_case, 2), "0.26");
  EXPECT_EQ(r.total.all, 126);
  EXPECT_EQ(r.intracranial.all + r.extracranial.all, 126);
}

TEST(Report, SecondModelShapedRun) {
  const Report r = build_report(testing::build_synthetic_run(testing::second_model_run()));
  expect_clean_audit(r);
  EXPECT_EQ(r.columns[0].metrics.fp, 182);
  EXPECT_EQ(format_fixed(r.columns[0].metrics.fp_per_case, 2), "1.27");
  const std::vector<std::int64_t> removed{78, 84, 66, 103, 94};
  for (std::size_t k = 0; k < 5; ++k)
    EXPECT_EQ(r.total.removed[k], removed[k]);
  const MethodColumn &m5 = column(r, Method::M5);
  EXPECT_EQ(m5.metrics.fp, 88);
  EXPECT_EQ(format_fixed(m5.metrics.fp_per_case, 2), "0.62");
  EXPECT_EQ(format_fixed(*m5.fp_reduction_pct, 1), "51.6");
  EXPECT_EQ(column(r, Method::M2).metrics.tp, 169);
}

TEST(Report, CategoriesFollowProfiles) {
  testing::SyntheticRun s;
  s.n_cases = 2;
  s.m1_only = 3;  // extracranial
  s.venous = 2;
  s.kept = 1;     // arterial
  const Report r = build_report(testing::build_synthetic_run(s));
  expect_clean_audit(r);
  EXPECT_EQ(r.extracranial.all, 3);
  EXPECT_EQ(r.categories[std::size_t(FpCategory::Venous)].all, 2);
  EXPECT_EQ(r.categories[std::size_t(FpCategory::Arterial)].all, 1);
  EXPECT_DOUBLE_EQ(*r.extracranial_pct_of_all, 50.0);
  EXPECT_DOUBLE_EQ(*r.extracranial_pct_of_intracranial, 100.0);
  EXPECT_FALSE(r.columns[0].metrics.sensitivity_defined);
}

TEST(Report, ValidationErrors) {
  EXPECT_THROW(build_report({}), ValidationError);
  testing::SyntheticRun s;
  s.n_cases = 2;
  s.tp = s.total_gt = 2;
  s.venous = 2;
  const auto good = testing::build_synthetic_run(s);

  auto dup = good;
  dup[1].case_id = dup[0].case_id;
  EXPECT_THROW(build_report(dup), ValidationError);

  auto missing_method = good;
  missing_method[1].results.pop_back();
  EXPECT_THROW(build_report(missing_method), ValidationError);

  auto missing_record = good;
  missing_record[0].results[2].records.pop_back();
  EXPECT_THROW(build_report(missing_record), ValidationError);

  auto unknown = good;
  unknown[0].results[0].records[0].detection_id = "nope";
  EXPECT_THROW(build_report(unknown), ValidationError);

  auto profile_clash = good;
  profile_clash[0].results[3].records[0].profile.brain += 1;
  EXPECT_THROW(build_report(profile_clash), ValidationError);
}

} // namespace
} // namespace apf::eval
