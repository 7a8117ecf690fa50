#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace apf::io {

/// Run `write` against a temporary sibling of `target`, then rename it into
/// place. The temporary is removed if `write` throws, so `target` is either
/// untouched or complete. Missing parent directories are created.
void write_atomically(const std::filesystem::path &target,
                      const std::function<void(const std::filesystem::path &tmp)> &write);

void write_text_atomically(const std::filesystem::path &target, std::string_view contents);

/// Whole file as bytes. Throws IoError when it cannot be opened.
std::string read_text_file(const std::filesystem::path &path);

} // namespace apf::io
