#include "apf/io/documents.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "apf/core/errors.hpp"
#include "apf/io/atomic_file.hpp"

namespace apf::io {

using nlohmann::json;

namespace {

json parse_json(const std::string &text, const std::string &source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(fmt::format("{}: invalid JSON: {}", source, e.what()), static_cast<long long>(e.byte));
  }
}

Index3 index3_from_json(const json &j, const std::string &context) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError(fmt::format("{}: expected an array of 3 integers", context));
  Index3 out{};
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number_integer())
      throw ParseError(fmt::format("{}: element {} is not an integer", context, a));
    out[a] = j[a].get<std::int64_t>();
  }
  return out;
}

Vec3 vec3_from_json(const json &j, const std::string &context) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError(fmt::format("{}: expected an array of 3 numbers", context));
  Vec3 out{};
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number())
      throw ParseError(fmt::format("{}: element {} is not a number", context, a));
    out[a] = j[a].get<double>();
  }
  return out;
}

const json &require(const json &obj, const char *key, const std::string &context) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(fmt::format("{}: missing field \"{}\"", context, key));
  return *it;
}

struct RawEntry {
  std::string id;
  Index3 min{};
  Index3 max{};
  double confidence = 1.0;
  json extra = json::object();
};

// Shared reader for both document kinds; `with_confidence` selects the schema.
std::vector<RawEntry> read_entries(const json &doc, const char *array_key, bool with_confidence,
                                   const std::string &source, std::string &case_id, json &top_extra) {
  if (!doc.is_object())
    throw ParseError(fmt::format("{}: top level must be an object", source));
  const json &cid = require(doc, "case_id", source);
  if (!cid.is_string())
    throw ParseError(fmt::format("{}: \"case_id\" must be a string", source));
  case_id = cid.get<std::string>();
  const json &arr = require(doc, array_key, source);
  if (!arr.is_array())
    throw ParseError(fmt::format("{}: \"{}\" must be an array", source, array_key));
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "case_id" && it.key() != array_key)
      top_extra[it.key()] = it.value();

  std::vector<RawEntry> entries;
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (std::size_t n = 0; n < arr.size(); ++n) {
    const json &e = arr[n];
    const std::string ctx = fmt::format("{}: {}[{}]", source, array_key, n);
    if (!e.is_object())
      throw ParseError(ctx + ": entry must be an object");
    RawEntry r;
    const json &id = require(e, "id", ctx);
    if (!id.is_string())
      throw ParseError(ctx + ": \"id\" must be a string");
    r.id = id.get<std::string>();
    r.min = index3_from_json(require(e, "min_voxel", ctx), ctx + ".min_voxel");
    r.max = index3_from_json(require(e, "max_voxel", ctx), ctx + ".max_voxel");
    if (with_confidence) {
      const json &c = require(e, "confidence", ctx);
      if (!c.is_number())
        throw ParseError(ctx + ": \"confidence\" must be a number");
      r.confidence = c.get<double>();
    }
    for (auto f = e.begin(); f != e.end(); ++f)
      if (f.key() != "id" && f.key() != "min_voxel" && f.key() != "max_voxel" &&
          !(with_confidence && f.key() == "confidence"))
        r.extra[f.key()] = f.value();

    for (int a = 0; a < 3; ++a)
      if (r.min[a] >= r.max[a])
        problems.push_back(fmt::format("entry {} ('{}'): min_voxel[{}] = {} is not below max_voxel[{}] = {}", n, r.id,
                                       a, r.min[a], a, r.max[a]));
    if (with_confidence && !(r.confidence >= 0.0 && r.confidence <= 1.0))
      problems.push_back(fmt::format("entry {} ('{}'): confidence {} outside [0, 1]", n, r.id, r.confidence));
    if (!seen.insert(r.id).second)
      problems.push_back(fmt::format("entry {}: duplicate id '{}'", n, r.id));
    entries.push_back(std::move(r));
  }
  if (!problems.empty()) {
    std::string msg = fmt::format("{}: {} invalid entr{}:", source, problems.size(), problems.size() == 1 ? "y" : "ies");
    for (const auto &p : problems)
      msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return entries;
}

json entry_json(const std::string &id, const VoxelBox &box, const double *confidence, const json *extra) {
  json e = extra ? *extra : json::object();
  e["id"] = id;
  e["min_voxel"] = box.min();
  e["max_voxel"] = box.max();
  if (confidence)
    e["confidence"] = *confidence;
  return e;
}

} // namespace

json voxel_box_to_json(const VoxelBox &box) {
  return json{{"empty", box.is_empty()}, {"min_voxel", box.min()}, {"max_voxel", box.max()}};
}

VoxelBox voxel_box_from_json(const json &j, const std::string &context) {
  if (!j.is_object())
    throw ParseError(context + ": expected an object");
  return {index3_from_json(require(j, "min_voxel", context), context + ".min_voxel"),
          index3_from_json(require(j, "max_voxel", context), context + ".max_voxel")};
}

// --- detections ----------------------------------------------------------

DetectionDocument parse_detections(const std::string &text, const std::string &source) {
  DetectionDocument doc;
  for (RawEntry &r : read_entries(parse_json(text, source), "detections", true, source, doc.case_id, doc.extra)) {
    if (!r.extra.empty())
      doc.entry_extra[r.id] = std::move(r.extra);
    doc.detections.push_back({r.id, VoxelBox(r.min, r.max), r.confidence});
  }
  return doc;
}

DetectionDocument read_detections(const std::filesystem::path &path) {
  return parse_detections(read_text_file(path), path.string());
}

std::string serialize_detections(const DetectionDocument &doc) {
  json out = doc.extra.is_object() ? doc.extra : json::object();
  out["case_id"] = doc.case_id;
  json arr = json::array();
  for (const Detection &d : doc.detections) {
    auto it = doc.entry_extra.find(d.id);
    arr.push_back(entry_json(d.id, d.box, &d.confidence, it == doc.entry_extra.end() ? nullptr : &it->second));
  }
  out["detections"] = std::move(arr);
  return out.dump(2) + "\n";
}

void write_detections(const std::filesystem::path &path, const DetectionDocument &doc) {
  write_text_atomically(path, serialize_detections(doc));
}

DetectionDocument with_detections(const DetectionDocument &doc, const std::vector<Detection> &keep) {
  DetectionDocument out;
  out.case_id = doc.case_id;
  out.extra = doc.extra;
  out.detections = keep;
  for (const Detection &d : keep)
    if (auto it = doc.entry_extra.find(d.id); it != doc.entry_extra.end())
      out.entry_extra.insert(*it);
  return out;
}

// --- ground truth --------------------------------------------------------

GroundTruthDocument parse_ground_truth(const std::string &text, const std::string &source) {
  GroundTruthDocument doc;
  for (RawEntry &r : read_entries(parse_json(text, source), "ground_truth", false, source, doc.case_id, doc.extra)) {
    if (!r.extra.empty())
      doc.entry_extra[r.id] = std::move(r.extra);
    doc.boxes.push_back({r.id, VoxelBox(r.min, r.max)});
  }
  return doc;
}

GroundTruthDocument read_ground_truth(const std::filesystem::path &path) {
  return parse_ground_truth(read_text_file(path), path.string());
}

std::string serialize_ground_truth(const GroundTruthDocument &doc) {
  json out = doc.extra.is_object() ? doc.extra : json::object();
  out["case_id"] = doc.case_id;
  json arr = json::array();
  for (const GroundTruthBox &g : doc.boxes) {
    auto it = doc.entry_extra.find(g.id);
    arr.push_back(entry_json(g.id, g.box, nullptr, it == doc.entry_extra.end() ? nullptr : &it->second));
  }
  out["ground_truth"] = std::move(arr);
  return out.dump(2) + "\n";
}

void write_ground_truth(const std::filesystem::path &path, const GroundTruthDocument &doc) {
  write_text_atomically(path, serialize_ground_truth(doc));
}

// --- affine --------------------------------------------------------------

Affine4 parse_affine(const std::string &text, const std::string &source) {
  std::vector<std::vector<double>> rows;
  std::size_t line_start = 0;
  int line_no = 0;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos)
      line_end = text.size();
    ++line_no;
    std::vector<double> row;
    std::size_t pos = line_start;
    while (pos < line_end) {
      while (pos < line_end && std::isspace(static_cast<unsigned char>(text[pos])))
        ++pos;
      if (pos >= line_end)
        break;
      std::size_t tok_end = pos;
      while (tok_end < line_end && !std::isspace(static_cast<unsigned char>(text[tok_end])))
        ++tok_end;
      double v = 0.0;
      const char *first = text.data() + pos;
      const char *last = text.data() + tok_end;
      if (*first == '+')
        ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(fmt::format("{}: line {}: '{}' is not a number", source, line_no,
                                     text.substr(pos, tok_end - pos)),
                         static_cast<long long>(pos));
      row.push_back(v);
      pos = tok_end;
    }
    if (!row.empty()) {
      if (row.size() != 4)
        throw ParseError(fmt::format("{}: line {} has {} values, expected 4", source, line_no, row.size()),
                         static_cast<long long>(line_start));
      rows.push_back(std::move(row));
    }
    line_start = line_end + 1;
  }
  if (rows.size() != 4)
    throw ParseError(fmt::format("{}: found {} rows, expected 4", source, rows.size()));
  Matrix4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      m[r][c] = rows[r][c];
  try {
    return Affine4(m);
  } catch (const InvalidTransform &e) {
    throw InvalidTransform(fmt::format("{}: {}", source, e.what()));
  }
}

Affine4 read_affine(const std::filesystem::path &path) { return parse_affine(read_text_file(path), path.string()); }

std::string serialize_affine(const Affine4 &t) {
  std::string out;
  for (const auto &row : t.matrix())
    out += fmt::format("{:.17g} {:.17g} {:.17g} {:.17g}\n", row[0], row[1], row[2], row[3]);
  return out;
}

void write_affine(const std::filesystem::path &path, const Affine4 &t) {
  write_text_atomically(path, serialize_affine(t));
}

// --- template box --------------------------------------------------------

WorldBox read_world_box(const std::filesystem::path &path) {
  const std::string source = path.string();
  const json j = parse_json(read_text_file(path), source);
  if (!j.is_object())
    throw ParseError(source + ": top level must be an object");
  const Vec3 lo = vec3_from_json(require(j, "min_world_mm", source), source + ".min_world_mm");
  const Vec3 hi = vec3_from_json(require(j, "max_world_mm", source), source + ".max_world_mm");
  try {
    return WorldBox(lo, hi);
  } catch (const InvalidArgument &e) {
    throw ValidationError(fmt::format("{}: {}", source, e.what()));
  }
}

void write_world_box(const std::filesystem::path &path, const WorldBox &box) {
  const json j{{"min_world_mm", box.min_mm()}, {"max_world_mm", box.max_mm()}};
  write_text_atomically(path, j.dump(2) + "\n");
}

} // namespace apf::io
