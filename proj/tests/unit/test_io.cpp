#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "apf/core/errors.hpp"
#include "apf/eval/matching.hpp"
#include "apf/filter/filter.hpp"
#include "apf/io/atomic_file.hpp"
#include "apf/io/case_dir.hpp"
#include "apf/io/config.hpp"
#include "apf/io/documents.hpp"
#include "apf/io/nifti.hpp"
#include "apf/io/removal_log.hpp"
#include "apf/io/results.hpp"
#include "apf/phantom/phantom.hpp"
#include "test_support.hpp"

namespace apf::io {
namespace {

using testing::TempDir;

// Hand-built single-file NIfTI-1, independent of the library writer.
struct RawNifti {
  std::vector<char> bytes = std::vector<char>(352, 0);

  template <class T> void put(std::size_t off, T v) { std::memcpy(bytes.data() + off, &v, sizeof v); }

  RawNifti(std::array<std::int16_t, 8> dim, std::int16_t datatype, std::int16_t bitpix,
           std::array<float, 3> pixdim) {
    put<std::int32_t>(0, 348);
    for (int i = 0; i < 8; ++i)
      put<std::int16_t>(40 + 2 * i, dim[i]);
    put<std::int16_t>(70, datatype);
    put<std::int16_t>(72, bitpix);
    put<float>(76, 1.0f);
    for (int i = 0; i < 3; ++i)
      put<float>(80 + 4 * i, pixdim[i]);
    put<float>(108, 352.0f);
    std::memcpy(bytes.data() + 344, "n+1", 4);
  }

  void write(const std::filesystem::path &p) const {
    std::ofstream(p, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size()));
  }
};

TEST(Nifti, ReadsHandBuiltInt16WithScaling) {
  TempDir dir;
  RawNifti n({3, 2, 2, 1, 1, 1, 1, 1}, 4, 16, {0.4f, 0.4f, 0.4f});
  n.put<float>(112, 2.0f);  // scl_slope
  n.put<float>(116, 1.0f);  // scl_inter
  for (std::int16_t v : {0, 1, 2, 3})
    n.bytes.insert(n.bytes.end(), reinterpret_cast<char *>(&v), reinterpret_cast<char *>(&v) + 2);
  n.write(dir / "a.nii");
  const Volume3D vol = read_volume(dir / "a.nii");
  EXPECT_EQ(vol.geometry().dims(), (Index3{2, 2, 1}));
  EXPECT_NEAR(vol.geometry().spacing_mm()[0], 0.4, 1e-6);
  EXPECT_EQ(vol.data(), (std::vector<float>{1, 3, 5, 7}));
}

TEST(Nifti, TrailingSingletonDimensionsAccepted) {
  TempDir dir;
  RawNifti n({4, 2, 1, 1, 1, 1, 1, 1}, 2, 8, {1, 1, 1});
  n.bytes.push_back(1);
  n.bytes.push_back(0);
  n.write(dir / "s.nii");
  EXPECT_EQ(read_mask(dir / "s.nii").popcount(), 1u);
}

TEST(Nifti, RejectsFourDimensionalAndBrokenHeaders) {
  TempDir dir;
  RawNifti four({4, 2, 1, 1, 3, 1, 1, 1}, 2, 8, {1, 1, 1});
  four.bytes.resize(four.bytes.size() + 6, 0);
  four.write(dir / "four.nii");
  EXPECT_THROW(read_volume(dir / "four.nii"), ParseError);

  RawNifti bad_type({3, 1, 1, 1, 1, 1, 1, 1}, 1234, 8, {1, 1, 1});
  bad_type.bytes.push_back(0);
  bad_type.write(dir / "type.nii");
  try {
    read_volume(dir / "type.nii");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.byte_offset(), 70);
  }

  RawNifti truncated({3, 4, 4, 4, 1, 1, 1, 1}, 2, 8, {1, 1, 1});
  truncated.write(dir / "short.nii");
  EXPECT_THROW(read_volume(dir / "short.nii"), ParseError);

  write_text_atomically(dir / "junk.nii", "not an image");
  EXPECT_THROW(read_volume(dir / "junk.nii"), ParseError);
  write_text_atomically(dir / "junk.nii.gz", "not gzip either");
  EXPECT_THROW(read_volume(dir / "junk.nii.gz"), ParseError);
  EXPECT_THROW(read_volume(dir / "missing.nii"), IoError);
}

TEST(Nifti, MaskRoundTripPlainAndCompressed) {
  TempDir dir;
  std::mt19937_64 rng(2);
  const Geometry g = Geometry::axis_aligned({7, 5, 3}, {0.4, 0.7, 1.25}, {-10.5, 3.0, 22.0});
  const BinaryMask m = testing::random_mask(rng, g, 0.4);
  for (const char *name : {"m.nii", "m.nii.gz"}) {
    write_mask(dir / name, m);
    const BinaryMask back = read_mask(dir / name);
    EXPECT_EQ(back.geometry().dims(), g.dims());
    EXPECT_TRUE(back.geometry().same_grid(g)) << name;
    EXPECT_TRUE(std::equal(back.occupancy().begin(), back.occupancy().end(), m.occupancy().begin()));
  }
  EXPECT_LT(std::filesystem::file_size(dir / "m.nii.gz"), std::filesystem::file_size(dir / "m.nii") + 64);
}

TEST(Nifti, RotatedAffineSurvives) {
  TempDir dir;
  const double c = std::cos(0.3), s = std::sin(0.3);
  const Affine4 a({{{0.5 * c, -0.5 * s, 0, 4}, {0.5 * s, 0.5 * c, 0, -2}, {0, 0, 2, 7}, {0, 0, 0, 1}}});
  const Geometry g({4, 4, 4}, {0.5, 0.5, 2}, a);
  BinaryMask m(g);
  m.set(1, 2, 3);
  write_mask(dir / "r.nii.gz", m);
  const BinaryMask back = read_mask(dir / "r.nii.gz");
  EXPECT_TRUE(back.geometry().same_grid(g));
  EXPECT_TRUE(back.at(1, 2, 3));
}

const char *kDetections = R"({
  "case_id": "c1",
  "model": "net-a",
  "detections": [
    {"id": "a", "min_voxel": [1, 2, 3], "max_voxel": [4, 5, 6], "confidence": 0.9, "note": "x"},
    {"id": "b", "min_voxel": [0, 0, 0], "max_voxel": [2, 2, 2], "confidence": 0.1}
  ]
})";

TEST(Detections, ParsePreservesUnknownFields) {
  const DetectionDocument doc = parse_detections(kDetections);
  EXPECT_EQ(doc.case_id, "c1");
  ASSERT_EQ(doc.detections.size(), 2u);
  EXPECT_EQ(doc.detections[0].box, VoxelBox({1, 2, 3}, {4, 5, 6}));
  const auto j = nlohmann::json::parse(serialize_detections(doc));
  EXPECT_EQ(j["model"], "net-a");
  EXPECT_EQ(j["detections"][0]["note"], "x");
  const auto kept = with_detections(doc, {doc.detections[1], doc.detections[0]});
  const auto j2 = nlohmann::json::parse(serialize_detections(kept));
  EXPECT_EQ(j2["detections"][0]["id"], "b");
  EXPECT_EQ(j2["detections"][1]["note"], "x");
}

TEST(Detections, RandomRoundTrip) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    DetectionDocument doc;
    doc.case_id = "case-" + std::to_string(trial);
    for (int i = 0; i < trial % 7; ++i) {
      const Index3 lo{testing::uniform_int(rng, -5, 40), testing::uniform_int(rng, -5, 40),
                      testing::uniform_int(rng, -5, 40)};
      doc.detections.push_back({"d" + std::to_string(i), VoxelBox(lo, {lo[0] + 1 + i, lo[1] + 2, lo[2] + 3}), u(rng)});
    }
    const DetectionDocument back = parse_detections(serialize_detections(doc));
    EXPECT_EQ(back.case_id, doc.case_id);
    EXPECT_EQ(back.detections, doc.detections);  // exact doubles
  }
}

TEST(Detections, Errors) {
  EXPECT_THROW(parse_detections("{"), ParseError);
  EXPECT_THROW(parse_detections(R"({"detections": []})"), ParseError);
  EXPECT_THROW(parse_detections(R"({"case_id": "c", "detections": [{"id": "a"}]})"), ParseError);
  EXPECT_THROW(parse_detections(
                   R"({"case_id": "c", "detections": [{"id": "a", "min_voxel": [1,1], "max_voxel": [2,2,2], "confidence": 1}]})"),
               ParseError);
  const std::string invalid = R"({"case_id": "c", "detections": [
    {"id": "a", "min_voxel": [3,3,3], "max_voxel": [2,4,4], "confidence": 0.5},
    {"id": "b", "min_voxel": [0,0,0], "max_voxel": [1,1,1], "confidence": 1.5},
    {"id": "b", "min_voxel": [0,0,0], "max_voxel": [1,1,1], "confidence": 0.5}]})";
  try {
    parse_detections(invalid);
    FAIL();
  } catch (const ValidationError &e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("'a'"), std::string::npos) << what;
    EXPECT_NE(what.find("1.5"), std::string::npos) << what;
    EXPECT_NE(what.find("duplicate"), std::string::npos) << what;
  }
  EXPECT_TRUE(parse_detections(R"({"case_id": "c", "detections": []})").detections.empty());
}

TEST(GroundTruth, RoundTrip) {
  GroundTruthDocument doc;
  doc.case_id = "c";
  doc.boxes = {{"g1", VoxelBox({1, 1, 1}, {3, 3, 3})}};
  TempDir dir;
  write_ground_truth(dir / "gt.json", doc);
  const auto back = read_ground_truth(dir / "gt.json");
  EXPECT_EQ(back.boxes, doc.boxes);
  EXPECT_TRUE(nlohmann::json::parse(read_text_file(dir / "gt.json")).contains("ground_truth"));
}

TEST(Affine, ParseAndRoundTrip) {
  EXPECT_EQ(parse_affine("1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n").matrix(), Affine4::identity().matrix());
  EXPECT_THROW(parse_affine("1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 2\n"), InvalidTransform);
  EXPECT_THROW(parse_affine("1 0 0 0\n0 1 0 0\n0 0 1 0\n"), ParseError);
  EXPECT_THROW(parse_affine("1 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"), ParseError);
  EXPECT_THROW(parse_affine("1 0 0 x\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"), ParseError);
  EXPECT_THROW(parse_affine("1 0 0 0\n0 0 0 0\n0 0 1 0\n0 0 0 1\n"), InvalidTransform);  // singular
  try {
    parse_affine("1 0 0 0\n0 1 0 zz\n0 0 1 0\n0 0 0 1\n");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.byte_offset(), 14);  // the offending token
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix4 m{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c)
        m[r][c] = u(rng) + (r == c ? 5.0 : 0.0);
    m[3] = {0, 0, 0, 1};
    const Affine4 a(m);
    const Affine4 back = parse_affine(serialize_affine(a));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        EXPECT_NEAR(back(r, c), a(r, c), 1e-12);
  }
}

TEST(Config, RoundTripAndKeys) {
  RunConfig c;
  c.pipeline.brain_dilation_mm = 2.5;
  c.pipeline.cvs_expand_mm = 0.1 + 0.2;
  c.pipeline.confidence_threshold = 0.65;
  c.pipeline.brain_uses_expanded_cvs_box = false;
  c.methods = {filter::Method::M5, filter::Method::M1};
  c.iou_threshold = 0.25;
  c.m2_min_voxels = 3;
  c.output_dir = "out dir";
  EXPECT_EQ(parse_config(serialize_config(c)), c);

  const RunConfig parsed = parse_config("# comment\nmethods = 1, 3\n\nconfidence_threshold=0.5  # trailing\n");
  EXPECT_EQ(parsed.methods, (std::vector<filter::Method>{filter::Method::M1, filter::Method::M3}));
  EXPECT_DOUBLE_EQ(parsed.pipeline.confidence_threshold, 0.5);
  EXPECT_DOUBLE_EQ(parsed.pipeline.brain_dilation_mm, RunConfig{}.pipeline.brain_dilation_mm);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("colour = red\n"), ParseError);
  EXPECT_THROW(parse_config("methods = 1\nmethods = 2\n"), ParseError);
  EXPECT_THROW(parse_config("iou_threshold\n"), ParseError);
  EXPECT_THROW(parse_config("iou_threshold = abc\n"), ParseError);
  EXPECT_THROW(parse_config("iou_threshold = 2\n"), ValidationError);
  EXPECT_THROW(parse_config("brain_dilation_mm = -1\n"), ValidationError);
  try {
    parse_config("methods = 1\nbogus = 1\n");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.byte_offset(), 12);
  }
  EXPECT_THROW(parse_method_list("1,1"), InvalidArgument);
  EXPECT_THROW(parse_method_list("9"), InvalidArgument);
}

TEST(RemovalLog, ReplayReproducesDecisions) {
  const auto pc = phantom::generate_phantom(phantom::default_phantom_spec(), 6);
  const auto ms =
      pipeline::build_mask_set(pc.brain_seg, pc.artery, pc.vein, pc.template_cvs_box, pc.template_to_target);
  TempDir dir;
  for (filter::Method m : filter::kAllMethods) {
    const auto result = filter::apply_method(pc.detections, ms, m);
    write_removal_log(dir / "log.jsonl", removal_log_records("c", result));
    const auto records = read_removal_log(dir / "log.jsonl");
    ASSERT_EQ(records.size(), pc.detections.size());
    for (const auto &r : records) {
      const auto d = filter::decide_removal(r.profile, r.method);
      EXPECT_EQ(d.remove, r.removed);
      EXPECT_EQ(d.reason, r.reason);
    }
    const auto replay = filter_result_from_log(records);
    EXPECT_EQ(replay.method, m);
    EXPECT_EQ(replay.records.size(), result.records.size());
  }
}

TEST(RemovalLog, Errors) {
  try {
    parse_removal_log("{\"case_id\": \"c\"}\n{broken\n");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_GE(e.byte_offset(), 0);
  }
  RemovalLogRecord a{"c1", "d", filter::Method::M1, false, "kept", {}};
  RemovalLogRecord b = a;
  b.case_id = "c2";
  EXPECT_THROW(filter_result_from_log({a, b}), ValidationError);
  b = a;
  b.method = filter::Method::M2;
  EXPECT_THROW(filter_result_from_log({a, b}), ValidationError);
  EXPECT_EQ(parse_removal_log(serialize_removal_log({a})), std::vector<RemovalLogRecord>{a});
}

TEST(CaseDir, WriteLoadAndMismatches) {
  TempDir root;
  const auto pc = phantom::generate_phantom(phantom::default_phantom_spec(), 1);
  const auto dir = root / "case-a";
  write_phantom_case(dir, pc);
  const LoadedCase lc = load_case(dir);
  EXPECT_EQ(lc.paths.case_id, "case-a");
  EXPECT_EQ(lc.artery, pc.artery);
  EXPECT_EQ(lc.detections.detections, pc.detections);
  ASSERT_TRUE(lc.ground_truth);
  EXPECT_EQ(lc.ground_truth->boxes, pc.ground_truth);
  EXPECT_EQ(read_planted_labels(dir / "planted_labels.json"), pc.planted);
  EXPECT_TRUE(read_world_box(dir / "template_cvs.json").min_mm() == pc.template_cvs_box.min_mm());

  // renamed directory -> case id mismatch
  std::filesystem::rename(dir, root / "case-b");
  EXPECT_THROW(load_case(root / "case-b"), ValidationError);

  // vein on another grid
  write_mask(root / "case-b" / "vein.nii.gz", BinaryMask(Geometry::axis_aligned({8, 8, 8}, {1, 1, 1})));
  EXPECT_ANY_THROW(load_case(root / "case-b"));

  std::filesystem::create_directories(root / "empty");
  try {
    locate_case(root / "empty");
    FAIL();
  } catch (const IoError &e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("artery"), std::string::npos);
    EXPECT_NE(what.find("detections"), std::string::npos);
  }
}

TEST(CaseDir, MaskSetRoundTrip) {
  TempDir root;
  const auto pc = phantom::generate_phantom(phantom::default_phantom_spec(), 1);
  const auto ms =
      pipeline::build_mask_set(pc.brain_seg, pc.artery, pc.vein, pc.template_cvs_box, pc.template_to_target);
  write_mask_set(root / "m", "c", ms, {});
  const auto back = read_mask_set(root / "m", pc.artery);
  EXPECT_EQ(back.brain, ms.brain);
  EXPECT_EQ(back.vein_final, ms.vein_final);
  EXPECT_EQ(back.cvs, ms.cvs);
  EXPECT_EQ(back.cvs_region_box, ms.cvs_region_box);
  EXPECT_THROW(read_mask_set(root / "m", BinaryMask(Geometry::axis_aligned({3, 3, 3}, {1, 1, 1}))),
               GeometryMismatch);
}

TEST(PhantomSpecJson, RoundTripAndErrors) {
  const auto spec = phantom::default_phantom_spec(phantom::PhantomVariant::VeinTouchingAneurysm, 3);
  const auto j = phantom_spec_to_json(spec);
  EXPECT_EQ(phantom_spec_to_json(phantom_spec_from_json(j)), j);
  const auto partial = phantom_spec_from_json(nlohmann::json{{"dims", {32, 32, 32}}});
  EXPECT_EQ(partial.dims, (Index3{32, 32, 32}));
  EXPECT_ANY_THROW(phantom_spec_from_json(nlohmann::json{{"colour", 1}}));
}

TEST(Evaluation, JsonRoundTripAndCsv) {
  const std::vector<Detection> dets{{"d1", VoxelBox({0, 0, 0}, {2, 2, 2}), 0.9},
                                    {"d2", VoxelBox({9, 9, 9}, {10, 10, 10}), 0.8}};
  const std::vector<GroundTruthBox> gts{{"g1", VoxelBox({0, 0, 0}, {2, 2, 2})},
                                        {"g2", VoxelBox({5, 5, 5}, {6, 6, 6})}};
  EvaluationDocument doc;
  doc.case_id = "c";
  doc.confidence_threshold = 0.8;
  doc.matching = eval::match_detections(dets, gts);
  doc.metrics = eval::compute_metrics(std::vector<eval::Matching>{doc.matching}, 1);
  const auto back = evaluation_from_json(evaluation_to_json(doc));
  EXPECT_EQ(back.case_id, "c");
  EXPECT_EQ(back.confidence_threshold, doc.confidence_threshold);
  EXPECT_EQ(back.matching.pairs, doc.matching.pairs);
  EXPECT_EQ(back.matching.fp_ids, doc.matching.fp_ids);
  EXPECT_EQ(back.metrics.tp, 1);
  EXPECT_EQ(back.metrics.fn, 1);
  const std::string csv = evaluation_to_csv(doc);
  EXPECT_EQ(csv, "case_id,tp,fp,fn,fp_per_case,sensitivity,iou_threshold\nc,1,1,1,1.00,0.5000,0.3\n");
}

TEST(AtomicFile, FailedWriteLeavesTargetUntouched) {
  TempDir dir;
  write_text_atomically(dir / "t.txt", "old");
  EXPECT_THROW(write_atomically(dir / "t.txt",
                                [](const std::filesystem::path &tmp) {
                                  std::ofstream(tmp) << "partial";
                                  throw IoError("boom");
                                }),
               IoError);
  EXPECT_EQ(read_text_file(dir / "t.txt"), "old");
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()), {}), 1);
}

} // namespace
} // namespace apf::io
