#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apf/core/affine.hpp"
#include "apf/core/box.hpp"
#include "apf/filter/detection.hpp"

namespace apf::io {

/// Detection file: {"case_id": ..., "detections": [{"id", "min_voxel",
/// "max_voxel", "confidence"}, ...]}. Fields this tool does not know about
/// are kept (per entry and at top level) and written back unchanged.
struct DetectionDocument {
  std::string case_id;
  std::vector<Detection> detections;
  nlohmann::json extra = nlohmann::json::object();
  std::map<std::string, nlohmann::json> entry_extra;  // by detection id
};

/// Ground-truth file: same layout under "ground_truth", without confidence.
struct GroundTruthDocument {
  std::string case_id;
  std::vector<GroundTruthBox> boxes;
  nlohmann::json extra = nlohmann::json::object();
  std::map<std::string, nlohmann::json> entry_extra;
};

/// Structural problems (bad JSON, missing or mistyped fields) raise
/// ParseError; content problems (empty box, duplicate id, confidence
/// outside [0,1]) raise ValidationError listing every offending entry.
DetectionDocument parse_detections(const std::string &text, const std::string &source = "<detections>");
DetectionDocument read_detections(const std::filesystem::path &path);
std::string serialize_detections(const DetectionDocument &doc);
void write_detections(const std::filesystem::path &path, const DetectionDocument &doc);

GroundTruthDocument parse_ground_truth(const std::string &text, const std::string &source = "<ground truth>");
GroundTruthDocument read_ground_truth(const std::filesystem::path &path);
std::string serialize_ground_truth(const GroundTruthDocument &doc);
void write_ground_truth(const std::filesystem::path &path, const GroundTruthDocument &doc);

/// Same document restricted to `keep` (in that order); extras follow their entries.
DetectionDocument with_detections(const DetectionDocument &doc, const std::vector<Detection> &keep);

/// 4 rows of 4 whitespace-separated numbers mapping template world to target world.
Affine4 parse_affine(const std::string &text, const std::string &source = "<affine>");
Affine4 read_affine(const std::filesystem::path &path);
std::string serialize_affine(const Affine4 &t);
void write_affine(const std::filesystem::path &path, const Affine4 &t);

/// {"min_world_mm": [x, y, z], "max_world_mm": [x, y, z]}
WorldBox read_world_box(const std::filesystem::path &path);
void write_world_box(const std::filesystem::path &path, const WorldBox &box);

nlohmann::json voxel_box_to_json(const VoxelBox &box);
VoxelBox voxel_box_from_json(const nlohmann::json &j, const std::string &context);

} // namespace apf::io
