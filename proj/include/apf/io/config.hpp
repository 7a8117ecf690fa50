#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "apf/filter/filter.hpp"
#include "apf/pipeline/mask_pipeline.hpp"

namespace apf::io {

/// Runtime settings shared by the commands. Stored as "key = value" lines;
/// '#' starts a comment. Keys:
///   brain_dilation_mm, cvs_expand_mm, confidence_threshold,
///   brain_uses_expanded_cvs_box (true/false), methods (e.g. "1,3,5"),
///   iou_threshold, m2_min_voxels, output_dir
struct RunConfig {
  pipeline::PipelineParams pipeline;
  std::vector<filter::Method> methods{std::begin(filter::kAllMethods), std::end(filter::kAllMethods)};
  double iou_threshold = 0.3;
  std::int64_t m2_min_voxels = 1;
  std::filesystem::path output_dir = "apf-out";

  /// Throws ValidationError naming the offending key.
  void validate() const;
  bool operator==(const RunConfig &other) const;
};

/// Unknown keys, repeated keys and malformed lines raise ParseError with
/// the byte offset of the line; values out of range raise ValidationError.
/// Keys not present keep their defaults.
RunConfig parse_config(const std::string &text, const std::string &source = "<config>");
RunConfig read_config(const std::filesystem::path &path);
std::string serialize_config(const RunConfig &config);
void write_config(const std::filesystem::path &path, const RunConfig &config);

/// "1,3,5" or "M1, M3" -> methods in the given order. Throws InvalidArgument
/// on unknown or repeated entries.
std::vector<filter::Method> parse_method_list(const std::string &text);

} // namespace apf::io
