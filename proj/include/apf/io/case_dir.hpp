#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "apf/core/affine.hpp"
#include "apf/core/mask.hpp"
#include "apf/io/documents.hpp"
#include "apf/phantom/phantom.hpp"
#include "apf/pipeline/mask_pipeline.hpp"

namespace apf::io {

/// A case directory holds
///   brain_seg.nii[.gz]  artery.nii[.gz]  vein.nii[.gz]
///   transform.txt       template-to-target affine
///   detections.json     model output for this case
///   ground_truth.json   optional annotations
/// and the directory name is the case id.
struct CasePaths {
  std::string case_id;
  std::filesystem::path dir;
  std::filesystem::path brain_seg;
  std::filesystem::path artery;
  std::filesystem::path vein;
  std::filesystem::path transform;
  std::filesystem::path detections;
  std::optional<std::filesystem::path> ground_truth;
};

/// Throws IoError naming every missing file.
CasePaths locate_case(const std::filesystem::path &dir);

struct LoadedCase {
  CasePaths paths;
  BinaryMask brain_seg;
  BinaryMask artery;
  BinaryMask vein;
  Affine4 transform;
  DetectionDocument detections;
  std::optional<GroundTruthDocument> ground_truth;
};

/// Loads and checks a case: the three volumes must share one grid
/// (GeometryMismatch) and the documents' case_id must equal the directory
/// name (ValidationError).
LoadedCase load_case(const std::filesystem::path &dir);

/// Writes a complete case directory (volumes gzip-compressed).
void write_case(const std::filesystem::path &dir, const BinaryMask &brain_seg, const BinaryMask &artery,
                const BinaryMask &vein, const Affine4 &transform, const DetectionDocument &detections,
                const std::optional<GroundTruthDocument> &ground_truth);

/// A phantom as a regular case directory plus template_cvs.json (the
/// template CVS box) and planted_labels.json (detection id -> tag).
void write_phantom_case(const std::filesystem::path &dir, const phantom::PhantomCase &pc);
std::map<std::string, phantom::PlantedTag> read_planted_labels(const std::filesystem::path &path);

/// Derived masks as written by build-masks: brain, vein_final and cvs
/// volumes plus cvs_region_box.json. The artery mask is not duplicated;
/// read_mask_set takes it from the case.
void write_mask_set(const std::filesystem::path &dir, const std::string &case_id, const pipeline::MaskSet &masks,
                    const pipeline::PipelineParams &params);
pipeline::MaskSet read_mask_set(const std::filesystem::path &dir, BinaryMask artery);

/// PhantomSpec as a JSON document; every field is optional on input and
/// defaults to default_phantom_spec().
nlohmann::json phantom_spec_to_json(const phantom::PhantomSpec &spec);
phantom::PhantomSpec phantom_spec_from_json(const nlohmann::json &j, const std::string &source = "<spec>");
phantom::PhantomSpec read_phantom_spec(const std::filesystem::path &path);
void write_phantom_spec(const std::filesystem::path &path, const phantom::PhantomSpec &spec);

} // namespace apf::io
