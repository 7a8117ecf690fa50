#include "apf/io/atomic_file.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "apf/core/errors.hpp"

namespace apf::io {

namespace fs = std::filesystem;

void write_atomically(const fs::path &target, const std::function<void(const fs::path &tmp)> &write) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec)
      throw IoError(fmt::format("cannot create directory {}: {}", target.parent_path().string(), ec.message()));
  }
  // keep the real extension last so format detection (".gz") still works on the temp name
  const fs::path tmp = target.parent_path() / fmt::format(".tmp-{}-{}-{}", ::getpid(), counter++,
                                                          target.filename().string());
  try {
    write(tmp);
  } catch (...) {
    fs::remove(tmp, ec);
    throw;
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(fmt::format("cannot move output into place at {}", target.string()));
  }
}

void write_text_atomically(const fs::path &target, std::string_view contents) {
  write_atomically(target, [&](const fs::path &tmp) {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out)
      throw IoError(fmt::format("failed writing {}", tmp.string()));
  });
}

std::string read_text_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace apf::io
