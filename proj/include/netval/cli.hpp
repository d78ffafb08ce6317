#pragma once

#include <iosfwd>

namespace netval {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitNotFound = 3,
  kExitSchema = 4,
  kExitInvalid = 5,
  kExitInfeasible = 6,
};

/// Runs the netval command line; results go to `out` (or the --output
/// file), diagnostics and the error JSON to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netval
