#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace twodsys::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kDataError = 2,
  kNumericalFailure = 3,
};

/// Runs one command line (args excludes the program name). Results go to
/// --output or `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twodsys::cli
