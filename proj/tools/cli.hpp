#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ladder::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // unexpected internal error
  kExitConfig = 2,   // bad flags or configuration
  kExitDatasetMissing = 3,
  kExitData = 4,     // unreadable or inconsistent input files
  kExitNumeric = 5,  // training diverged
};

/// Runs one command. `args` excludes the program name. Failures print a
/// single JSON line {"error": {...}} to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ladder::cli
