#pragma once

#include <ostream>

namespace vgbn {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,        // document fails validation
  kExitParse = 2,          // unreadable or malformed document
  kExitInference = 3,      // backend failure
  kExitOracleMismatch = 4, // --oracle deviation above tolerance
  kExitUsage = 64,
};

/// Entry point of the `vgbn` command line (validate | infer | kf).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vgbn
