#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "apf/filter/filter.hpp"

namespace apf::io {

/// One line of a removal log: the decision taken for one thresholded input
/// detection, with the overlap profile it was based on.
struct RemovalLogRecord {
  std::string case_id;
  std::string detection_id;
  filter::Method method = filter::Method::M1;
  bool removed = false;
  std::string reason;
  filter::OverlapProfile profile;
  bool operator==(const RemovalLogRecord &) const = default;
};

std::vector<RemovalLogRecord> removal_log_records(const std::string &case_id, const filter::FilterResult &result);

/// Line-delimited JSON, one object per record:
/// {"case_id", "detection_id", "method", "removed", "reason",
///  "profile": {"brain", "artery", "vein", "cvs", "box_volume"}}
std::string serialize_removal_log(const std::vector<RemovalLogRecord> &records);
/// Blank lines are skipped. Throws ParseError with the byte offset of the bad line.
std::vector<RemovalLogRecord> parse_removal_log(const std::string &text, const std::string &source = "<log>");
std::vector<RemovalLogRecord> read_removal_log(const std::filesystem::path &path);
void write_removal_log(const std::filesystem::path &path, const std::vector<RemovalLogRecord> &records);

/// Rebuild the per-record part of a FilterResult from log lines of a single
/// case and method (kept/removed detection lists stay empty, since boxes are
/// not logged). Throws ValidationError on mixed cases or methods.
filter::FilterResult filter_result_from_log(const std::vector<RemovalLogRecord> &records);

} // namespace apf::io
