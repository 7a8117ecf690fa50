#pragma once

#include <string>
#include <vector>

namespace apf::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs the `apf` command line. args[0] is the program name. Diagnostics
/// go to stderr; results and summaries to stdout.
int run(const std::vector<std::string> &args);

} // namespace apf::cli
