#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace iva::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Stable exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsageError = 1,
    kGenerationError = 2,
    kTransportFailure = 3,  // no episode completed
};

/// Runs `iva-bench` with `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads `key = value` lines (blank lines and `#` comments ignored) and
/// returns `--key value` pairs for keys not already given in `args`.
std::vector<std::string> merge_config_file(const std::vector<std::string>& args, const std::string& path);

}  // namespace iva::cli
