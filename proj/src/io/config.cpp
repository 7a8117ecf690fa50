#include "apf/io/config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "apf/core/errors.hpp"
#include "apf/io/atomic_file.hpp"

namespace apf::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string &v, const std::string &where, long long offset) {
  double out = 0.0;
  const char *first = v.data();
  const char *last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (v.empty() || ec != std::errc() || ptr != last)
    throw ParseError(fmt::format("{}: '{}' is not a number", where, v), offset);
  return out;
}

std::int64_t to_int(const std::string &v, const std::string &where, long long offset) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ParseError(fmt::format("{}: '{}' is not an integer", where, v), offset);
  return out;
}

bool to_bool(const std::string &v, const std::string &where, long long offset) {
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw ParseError(fmt::format("{}: '{}' is not a boolean (true/false)", where, v), offset);
}

} // namespace

void RunConfig::validate() const {
  try {
    pipeline.validate();
  } catch (const InvalidArgument &e) {
    throw ValidationError(e.what());
  }
  if (methods.empty())
    throw ValidationError("methods: at least one method is required");
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
    throw ValidationError(fmt::format("iou_threshold must lie in [0, 1], got {}", iou_threshold));
  if (m2_min_voxels < 1)
    throw ValidationError(fmt::format("m2_min_voxels must be at least 1, got {}", m2_min_voxels));
  if (output_dir.empty())
    throw ValidationError("output_dir must not be empty");
}

bool RunConfig::operator==(const RunConfig &o) const {
  return pipeline.brain_dilation_mm == o.pipeline.brain_dilation_mm &&
         pipeline.cvs_expand_mm == o.pipeline.cvs_expand_mm &&
         pipeline.confidence_threshold == o.pipeline.confidence_threshold &&
         pipeline.brain_uses_expanded_cvs_box == o.pipeline.brain_uses_expanded_cvs_box && methods == o.methods &&
         iou_threshold == o.iou_threshold && m2_min_voxels == o.m2_min_voxels && output_dir == o.output_dir;
}

std::vector<filter::Method> parse_method_list(const std::string &text) {
  std::vector<filter::Method> out;
  std::set<filter::Method> seen;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos)
      comma = text.size();
    const std::string item = trim(std::string_view(text).substr(start, comma - start));
    const filter::Method m = filter::parse_method(item);
    if (!seen.insert(m).second)
      throw InvalidArgument(fmt::format("method {} listed twice", filter::method_name(m)));
    out.push_back(m);
    start = comma + 1;
  }
  return out;
}

RunConfig parse_config(const std::string &text, const std::string &source) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::size_t line_start = 0;
  int line_no = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos)
      line_end = text.size();
    ++line_no;
    std::string_view line(text.data() + line_start, line_end - line_start);
    const long long offset = static_cast<long long>(line_start);
    line_start = line_end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    if (trim(line).empty())
      continue;
    const auto eq = line.find('=');
    const std::string where = fmt::format("{}:{}", source, line_no);
    if (eq == std::string_view::npos)
      throw ParseError(fmt::format("{}: expected 'key = value'", where), offset);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ParseError(fmt::format("{}: key '{}' given twice", where, key), offset);

    if (key == "brain_dilation_mm")
      cfg.pipeline.brain_dilation_mm = to_double(value, where, offset);
    else if (key == "cvs_expand_mm")
      cfg.pipeline.cvs_expand_mm = to_double(value, where, offset);
    else if (key == "confidence_threshold")
      cfg.pipeline.confidence_threshold = to_double(value, where, offset);
    else if (key == "brain_uses_expanded_cvs_box")
      cfg.pipeline.brain_uses_expanded_cvs_box = to_bool(value, where, offset);
    else if (key == "methods" || key == "method") {
      try {
        cfg.methods = parse_method_list(value);
      } catch (const InvalidArgument &e) {
        throw ParseError(fmt::format("{}: {}", where, e.what()), offset);
      }
    } else if (key == "iou_threshold")
      cfg.iou_threshold = to_double(value, where, offset);
    else if (key == "m2_min_voxels")
      cfg.m2_min_voxels = to_int(value, where, offset);
    else if (key == "output_dir") {
      if (value.empty())
        throw ParseError(fmt::format("{}: output_dir is empty", where), offset);
      cfg.output_dir = value;
    } else
      throw ParseError(fmt::format("{}: unknown key '{}'", where, key), offset);
  }
  try {
    cfg.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(fmt::format("{}: {}", source, e.what()));
  }
  return cfg;
}

RunConfig read_config(const std::filesystem::path &path) { return parse_config(read_text_file(path), path.string()); }

std::string serialize_config(const RunConfig &c) {
  std::string methods;
  for (filter::Method m : c.methods)
    methods += (methods.empty() ? "" : ",") + std::to_string(filter::method_number(m));
  // {} prints the shortest representation that reads back to the same double
  return fmt::format("brain_dilation_mm = {}\n"
                     "cvs_expand_mm = {}\n"
                     "confidence_threshold = {}\n"
                     "brain_uses_expanded_cvs_box = {}\n"
                     "methods = {}\n"
                     "iou_threshold = {}\n"
                     "m2_min_voxels = {}\n"
                     "output_dir = {}\n",
                     c.pipeline.brain_dilation_mm, c.pipeline.cvs_expand_mm, c.pipeline.confidence_threshold,
                     c.pipeline.brain_uses_expanded_cvs_box, methods, c.iou_threshold, c.m2_min_voxels,
                     c.output_dir.string());
}

void write_config(const std::filesystem::path &path, const RunConfig &config) {
  write_text_atomically(path, serialize_config(config));
}

} // namespace apf::io
