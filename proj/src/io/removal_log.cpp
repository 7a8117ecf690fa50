#include "apf/io/removal_log.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "apf/core/errors.hpp"
#include "apf/io/atomic_file.hpp"

namespace apf::io {

using nlohmann::json;

std::vector<RemovalLogRecord> removal_log_records(const std::string &case_id, const filter::FilterResult &result) {
  std::vector<RemovalLogRecord> out;
  out.reserve(result.records.size());
  for (const auto &r : result.records)
    out.push_back({case_id, r.detection_id, result.method, r.removed, r.reason, r.profile});
  return out;
}

std::string serialize_removal_log(const std::vector<RemovalLogRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    json j{{"case_id", r.case_id},
           {"detection_id", r.detection_id},
           {"method", filter::method_number(r.method)},
           {"removed", r.removed},
           {"reason", r.reason},
           {"profile",
            {{"brain", r.profile.brain},
             {"artery", r.profile.artery},
             {"vein", r.profile.vein},
             {"cvs", r.profile.cvs},
             {"box_volume", r.profile.box_volume}}}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

template <typename T> T field(const json &obj, const char *key, const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(fmt::format("{}: missing field \"{}\"", where, key));
  try {
    if constexpr (std::is_same_v<T, std::int64_t>) {
      if (!it->is_number_integer())
        throw ParseError(fmt::format("{}: \"{}\" must be an integer", where, key));
    }
    return it->get<T>();
  } catch (const json::type_error &) {
    throw ParseError(fmt::format("{}: \"{}\" has the wrong type", where, key));
  }
}

} // namespace

std::vector<RemovalLogRecord> parse_removal_log(const std::string &text, const std::string &source) {
  std::vector<RemovalLogRecord> out;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos)
      end = text.size();
    ++line_no;
    const std::string line = text.substr(start, end - start);
    const long long offset = static_cast<long long>(start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const std::string where = fmt::format("{}:{}", source, line_no);
    try {
      const json j = json::parse(line);
      if (!j.is_object())
        throw ParseError(where + ": record must be an object");
      RemovalLogRecord r;
      r.case_id = field<std::string>(j, "case_id", where);
      r.detection_id = field<std::string>(j, "detection_id", where);
      const auto m = field<std::int64_t>(j, "method", where);
      if (m < 1 || m > 5)
        throw ParseError(fmt::format("{}: method {} outside 1..5", where, m));
      r.method = static_cast<filter::Method>(m);
      r.removed = field<bool>(j, "removed", where);
      r.reason = field<std::string>(j, "reason", where);
      auto p = j.find("profile");
      if (p == j.end() || !p->is_object())
        throw ParseError(where + ": missing object \"profile\"");
      r.profile.brain = field<std::int64_t>(*p, "brain", where + ".profile");
      r.profile.artery = field<std::int64_t>(*p, "artery", where + ".profile");
      r.profile.vein = field<std::int64_t>(*p, "vein", where + ".profile");
      r.profile.cvs = field<std::int64_t>(*p, "cvs", where + ".profile");
      r.profile.box_volume = field<std::int64_t>(*p, "box_volume", where + ".profile");
      out.push_back(std::move(r));
    } catch (const json::parse_error &e) {
      throw ParseError(fmt::format("{}: invalid JSON: {}", where, e.what()),
                       offset + static_cast<long long>(e.byte) - 1);
    } catch (const ParseError &e) {
      if (e.byte_offset() >= 0)
        throw;
      throw ParseError(e.what(), offset);
    }
  }
  return out;
}

std::vector<RemovalLogRecord> read_removal_log(const std::filesystem::path &path) {
  return parse_removal_log(read_text_file(path), path.string());
}

void write_removal_log(const std::filesystem::path &path, const std::vector<RemovalLogRecord> &records) {
  write_text_atomically(path, serialize_removal_log(records));
}

filter::FilterResult filter_result_from_log(const std::vector<RemovalLogRecord> &records) {
  filter::FilterResult result;
  if (records.empty())
    return result;
  result.method = records.front().method;
  for (const auto &r : records) {
    if (r.method != result.method || r.case_id != records.front().case_id)
      throw ValidationError(fmt::format("removal log mixes cases or methods ('{}' {} vs '{}' {})",
                                        records.front().case_id, filter::method_name(result.method), r.case_id,
                                        filter::method_name(r.method)));
    result.records.push_back({r.detection_id, r.removed, r.reason, r.profile});
  }
  return result;
}

} // namespace apf::io
