#include "apf/io/case_dir.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "apf/core/errors.hpp"
#include "apf/io/atomic_file.hpp"
#include "apf/io/nifti.hpp"

namespace apf::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<fs::path> find_volume(const fs::path &dir, const std::string &stem) {
  for (const char *ext : {".nii.gz", ".nii"}) {
    fs::path p = dir / (stem + ext);
    if (fs::is_regular_file(p))
      return p;
  }
  return std::nullopt;
}

std::string case_id_of(const fs::path &dir) {
  fs::path p = dir;
  if (!p.has_filename())
    p = p.parent_path();  // trailing slash
  return p.filename().string();
}

} // namespace

CasePaths locate_case(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw IoError(fmt::format("case directory {} does not exist", dir.string()));
  CasePaths paths;
  paths.dir = dir;
  paths.case_id = case_id_of(dir);
  std::vector<std::string> missing;
  auto volume = [&](const char *stem, fs::path &out) {
    if (auto p = find_volume(dir, stem))
      out = *p;
    else
      missing.push_back(std::string(stem) + ".nii[.gz]");
  };
  volume("brain_seg", paths.brain_seg);
  volume("artery", paths.artery);
  volume("vein", paths.vein);
  paths.transform = dir / "transform.txt";
  if (!fs::is_regular_file(paths.transform))
    missing.push_back("transform.txt");
  paths.detections = dir / "detections.json";
  if (!fs::is_regular_file(paths.detections))
    missing.push_back("detections.json");
  if (fs::is_regular_file(dir / "ground_truth.json"))
    paths.ground_truth = dir / "ground_truth.json";
  if (!missing.empty()) {
    std::string list;
    for (const auto &m : missing)
      list += (list.empty() ? "" : ", ") + m;
    throw IoError(fmt::format("case directory {} is missing {}", dir.string(), list));
  }
  return paths;
}

LoadedCase load_case(const fs::path &dir) {
  CasePaths paths = locate_case(dir);
  BinaryMask brain = read_mask(paths.brain_seg);
  BinaryMask artery = read_mask(paths.artery);
  BinaryMask vein = read_mask(paths.vein);
  require_same_grid(brain.geometry(), artery.geometry(), fmt::format("case {}: brain_seg vs artery", paths.case_id));
  require_same_grid(brain.geometry(), vein.geometry(), fmt::format("case {}: brain_seg vs vein", paths.case_id));
  Affine4 transform = read_affine(paths.transform);
  DetectionDocument dets = read_detections(paths.detections);
  if (dets.case_id != paths.case_id)
    throw ValidationError(fmt::format("{}: case_id '{}' does not match directory name '{}'",
                                      paths.detections.string(), dets.case_id, paths.case_id));
  std::optional<GroundTruthDocument> gt;
  if (paths.ground_truth) {
    gt = read_ground_truth(*paths.ground_truth);
    if (gt->case_id != paths.case_id)
      throw ValidationError(fmt::format("{}: case_id '{}' does not match directory name '{}'",
                                        paths.ground_truth->string(), gt->case_id, paths.case_id));
  }
  return LoadedCase{std::move(paths), std::move(brain), std::move(artery), std::move(vein),
                    transform,        std::move(dets),  std::move(gt)};
}

void write_case(const fs::path &dir, const BinaryMask &brain_seg, const BinaryMask &artery, const BinaryMask &vein,
                const Affine4 &transform, const DetectionDocument &detections,
                const std::optional<GroundTruthDocument> &ground_truth) {
  write_mask(dir / "brain_seg.nii.gz", brain_seg);
  write_mask(dir / "artery.nii.gz", artery);
  write_mask(dir / "vein.nii.gz", vein);
  write_affine(dir / "transform.txt", transform);
  write_detections(dir / "detections.json", detections);
  if (ground_truth)
    write_ground_truth(dir / "ground_truth.json", *ground_truth);
}

void write_phantom_case(const fs::path &dir, const phantom::PhantomCase &pc) {
  const std::string case_id = case_id_of(dir);
  DetectionDocument dets;
  dets.case_id = case_id;
  dets.detections = pc.detections;
  GroundTruthDocument gt;
  gt.case_id = case_id;
  gt.boxes = pc.ground_truth;
  write_case(dir, pc.brain_seg, pc.artery, pc.vein, pc.template_to_target, dets, gt);
  write_world_box(dir / "template_cvs.json", pc.template_cvs_box);
  json labels = json::object();
  for (const auto &[id, tag] : pc.planted)
    labels[id] = phantom::tag_name(tag);
  write_text_atomically(dir / "planted_labels.json", json{{"case_id", case_id}, {"labels", labels}}.dump(2) + "\n");
}

std::map<std::string, phantom::PlantedTag> read_planted_labels(const fs::path &path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error &e) {
    throw ParseError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()), static_cast<long long>(e.byte));
  }
  auto labels = j.find("labels");
  if (!j.is_object() || labels == j.end() || !labels->is_object())
    throw ParseError(path.string() + ": expected an object with \"labels\"");
  std::map<std::string, phantom::PlantedTag> out;
  for (auto it = labels->begin(); it != labels->end(); ++it) {
    if (!it->is_string())
      throw ParseError(fmt::format("{}: label of '{}' must be a string", path.string(), it.key()));
    try {
      out[it.key()] = phantom::parse_tag(it->get<std::string>());
    } catch (const InvalidArgument &e) {
      throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

// --- mask sets -----------------------------------------------------------

void write_mask_set(const fs::path &dir, const std::string &case_id, const pipeline::MaskSet &masks,
                    const pipeline::PipelineParams &params) {
  write_mask(dir / "brain.nii.gz", masks.brain);
  write_mask(dir / "vein_final.nii.gz", masks.vein_final);
  write_mask(dir / "cvs.nii.gz", masks.cvs);
  const json record{{"case_id", case_id},
                    {"cvs_region_box", voxel_box_to_json(masks.cvs_region_box)},
                    {"brain_dilation_mm", params.brain_dilation_mm},
                    {"cvs_expand_mm", params.cvs_expand_mm},
                    {"brain_uses_expanded_cvs_box", params.brain_uses_expanded_cvs_box}};
  write_text_atomically(dir / "cvs_region_box.json", record.dump(2) + "\n");
}

pipeline::MaskSet read_mask_set(const fs::path &dir, BinaryMask artery) {
  auto need = [&](const char *stem) {
    auto p = find_volume(dir, stem);
    if (!p)
      throw IoError(fmt::format("mask directory {} has no {}.nii[.gz]", dir.string(), stem));
    return read_mask(*p);
  };
  BinaryMask brain = need("brain");
  BinaryMask vein_final = need("vein_final");
  BinaryMask cvs = need("cvs");
  for (const BinaryMask *m : {&vein_final, &cvs, &artery})
    require_same_grid(brain.geometry(), m->geometry(), fmt::format("mask set {}", dir.string()));

  const fs::path record_path = dir / "cvs_region_box.json";
  json record;
  try {
    record = json::parse(read_text_file(record_path));
  } catch (const json::parse_error &e) {
    throw ParseError(fmt::format("{}: invalid JSON: {}", record_path.string(), e.what()),
                     static_cast<long long>(e.byte));
  }
  if (!record.is_object() || !record.contains("cvs_region_box"))
    throw ParseError(record_path.string() + ": missing \"cvs_region_box\"");
  VoxelBox region = voxel_box_from_json(record["cvs_region_box"], record_path.string() + ".cvs_region_box");
  return pipeline::MaskSet{std::move(brain), std::move(artery), std::move(vein_final), std::move(cvs), region};
}

// --- phantom spec --------------------------------------------------------

namespace {

json vec_json(const Vec3 &v) { return json::array({v[0], v[1], v[2]}); }

json planted_json(const phantom::PlantedBox &b) {
  return json{{"name", b.name},
              {"tag", phantom::tag_name(b.tag)},
              {"min_world_mm", vec_json(b.box_mm.min_mm())},
              {"max_world_mm", vec_json(b.box_mm.max_mm())}};
}

json tube_json(const phantom::Tube &t) {
  json pts = json::array();
  for (const Vec3 &p : t.points_mm)
    pts.push_back(vec_json(p));
  return json{{"points_mm", pts}, {"radius_mm", t.radius_mm}};
}

struct SpecReader {
  std::string source;

  [[noreturn]] void fail(const std::string &where, const std::string &msg) const {
    throw ParseError(fmt::format("{}: {}: {}", source, where, msg));
  }
  double number(const json &j, const std::string &where) const {
    if (!j.is_number())
      fail(where, "expected a number");
    return j.get<double>();
  }
  Vec3 vec(const json &j, const std::string &where) const {
    if (!j.is_array() || j.size() != 3)
      fail(where, "expected an array of 3 numbers");
    return {number(j[0], where), number(j[1], where), number(j[2], where)};
  }
  Index3 index(const json &j, const std::string &where) const {
    if (!j.is_array() || j.size() != 3)
      fail(where, "expected an array of 3 integers");
    Index3 out{};
    for (int a = 0; a < 3; ++a) {
      if (!j[a].is_number_integer())
        fail(where, "expected an array of 3 integers");
      out[a] = j[a].get<std::int64_t>();
    }
    return out;
  }
  WorldBox box(const json &j, const std::string &where) const {
    if (!j.is_object() || !j.contains("min_world_mm") || !j.contains("max_world_mm"))
      fail(where, "expected {\"min_world_mm\", \"max_world_mm\"}");
    try {
      return WorldBox(vec(j["min_world_mm"], where + ".min_world_mm"), vec(j["max_world_mm"], where + ".max_world_mm"));
    } catch (const InvalidArgument &e) {
      throw ValidationError(fmt::format("{}: {}: {}", source, where, e.what()));
    }
  }
  phantom::Tube tube(const json &j, const std::string &where) const {
    if (!j.is_object() || !j.contains("points_mm") || !j["points_mm"].is_array())
      fail(where, "expected {\"points_mm\": [...], \"radius_mm\": r}");
    phantom::Tube t;
    for (std::size_t n = 0; n < j["points_mm"].size(); ++n)
      t.points_mm.push_back(vec(j["points_mm"][n], fmt::format("{}.points_mm[{}]", where, n)));
    if (j.contains("radius_mm"))
      t.radius_mm = number(j["radius_mm"], where + ".radius_mm");
    return t;
  }
  phantom::PlantedBox planted(const json &j, const std::string &where) const {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string() || !j.contains("tag") ||
        !j["tag"].is_string())
      fail(where, "expected an object with string \"name\" and \"tag\"");
    phantom::PlantedTag tag{};
    try {
      tag = phantom::parse_tag(j["tag"].get<std::string>());
    } catch (const InvalidArgument &e) {
      fail(where, e.what());
    }
    return {j["name"].get<std::string>(), box(j, where), tag};
  }
  template <typename T, typename F> std::vector<T> list(const json &j, const std::string &where, F item) const {
    if (!j.is_array())
      fail(where, "expected an array");
    std::vector<T> out;
    for (std::size_t n = 0; n < j.size(); ++n)
      out.push_back(item(j[n], fmt::format("{}[{}]", where, n)));
    return out;
  }
};

} // namespace

json phantom_spec_to_json(const phantom::PhantomSpec &s) {
  json arteries = json::array(), veins = json::array(), aneurysms = json::array(), decoys = json::array();
  for (const auto &t : s.arteries)
    arteries.push_back(tube_json(t));
  for (const auto &t : s.veins)
    veins.push_back(tube_json(t));
  for (const auto &b : s.aneurysms)
    aneurysms.push_back(planted_json(b));
  for (const auto &b : s.decoys)
    decoys.push_back(planted_json(b));
  json transform = json::array();
  for (const auto &row : s.template_to_target.matrix())
    transform.push_back(json::array({row[0], row[1], row[2], row[3]}));
  return json{{"dims", json::array({s.dims[0], s.dims[1], s.dims[2]})},
              {"spacing_mm", vec_json(s.spacing_mm)},
              {"origin_mm", vec_json(s.origin_mm)},
              {"brain", {{"center_mm", vec_json(s.brain.center_mm)}, {"radii_mm", vec_json(s.brain.radii_mm)}}},
              {"arteries", arteries},
              {"veins", veins},
              {"template_cvs_box",
               {{"min_world_mm", vec_json(s.template_cvs_box.min_mm())},
                {"max_world_mm", vec_json(s.template_cvs_box.max_mm())}}},
              {"template_to_target", transform},
              {"brain_margin_mm", s.brain_margin_mm},
              {"cvs_expand_mm", s.cvs_expand_mm},
              {"aneurysms", aneurysms},
              {"decoys", decoys},
              {"decoy_confidence", json::array({s.decoy_confidence_min, s.decoy_confidence_max})},
              {"aneurysm_confidence", json::array({s.aneurysm_confidence_min, s.aneurysm_confidence_max})}};
}

phantom::PhantomSpec phantom_spec_from_json(const json &j, const std::string &source) {
  const SpecReader r{source};
  if (!j.is_object())
    r.fail("top level", "expected an object");
  static const char *const kKnown[] = {"dims",          "spacing_mm",      "origin_mm",        "brain",
                                       "arteries",      "veins",           "template_cvs_box", "template_to_target",
                                       "brain_margin_mm", "cvs_expand_mm", "aneurysms",        "decoys",
                                       "decoy_confidence", "aneurysm_confidence"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(kKnown), std::end(kKnown), it.key()) == std::end(kKnown))
      r.fail(it.key(), "unknown field");

  phantom::PhantomSpec s = phantom::default_phantom_spec();
  if (j.contains("dims"))
    s.dims = r.index(j["dims"], "dims");
  if (j.contains("spacing_mm"))
    s.spacing_mm = r.vec(j["spacing_mm"], "spacing_mm");
  if (j.contains("origin_mm"))
    s.origin_mm = r.vec(j["origin_mm"], "origin_mm");
  if (j.contains("brain")) {
    const json &b = j["brain"];
    if (!b.is_object() || !b.contains("center_mm") || !b.contains("radii_mm"))
      r.fail("brain", "expected {\"center_mm\", \"radii_mm\"}");
    s.brain = {r.vec(b["center_mm"], "brain.center_mm"), r.vec(b["radii_mm"], "brain.radii_mm")};
  }
  auto tube = [&](const json &x, const std::string &w) { return r.tube(x, w); };
  auto planted = [&](const json &x, const std::string &w) { return r.planted(x, w); };
  if (j.contains("arteries"))
    s.arteries = r.list<phantom::Tube>(j["arteries"], "arteries", tube);
  if (j.contains("veins"))
    s.veins = r.list<phantom::Tube>(j["veins"], "veins", tube);
  if (j.contains("template_cvs_box"))
    s.template_cvs_box = r.box(j["template_cvs_box"], "template_cvs_box");
  if (j.contains("template_to_target")) {
    const json &t = j["template_to_target"];
    if (!t.is_array() || t.size() != 4)
      r.fail("template_to_target", "expected 4 rows of 4 numbers");
    Matrix4 m{};
    for (int row = 0; row < 4; ++row) {
      if (!t[row].is_array() || t[row].size() != 4)
        r.fail("template_to_target", "expected 4 rows of 4 numbers");
      for (int c = 0; c < 4; ++c)
        m[row][c] = r.number(t[row][c], "template_to_target");
    }
    s.template_to_target = Affine4(m);
  }
  if (j.contains("brain_margin_mm"))
    s.brain_margin_mm = r.number(j["brain_margin_mm"], "brain_margin_mm");
  if (j.contains("cvs_expand_mm"))
    s.cvs_expand_mm = r.number(j["cvs_expand_mm"], "cvs_expand_mm");
  if (j.contains("aneurysms"))
    s.aneurysms = r.list<phantom::PlantedBox>(j["aneurysms"], "aneurysms", planted);
  if (j.contains("decoys"))
    s.decoys = r.list<phantom::PlantedBox>(j["decoys"], "decoys", planted);
  auto range = [&](const char *key, double &lo, double &hi) {
    if (!j.contains(key))
      return;
    const json &x = j[key];
    if (!x.is_array() || x.size() != 2)
      r.fail(key, "expected [min, max]");
    lo = r.number(x[0], key);
    hi = r.number(x[1], key);
  };
  range("decoy_confidence", s.decoy_confidence_min, s.decoy_confidence_max);
  range("aneurysm_confidence", s.aneurysm_confidence_min, s.aneurysm_confidence_max);
  return s;
}

phantom::PhantomSpec read_phantom_spec(const fs::path &path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error &e) {
    throw ParseError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()), static_cast<long long>(e.byte));
  }
  return phantom_spec_from_json(j, path.string());
}

void write_phantom_spec(const fs::path &path, const phantom::PhantomSpec &spec) {
  write_text_atomically(path, phantom_spec_to_json(spec).dump(2) + "\n");
}

} // namespace apf::io
