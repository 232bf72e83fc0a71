#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace dirimult {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitInternal = 2,
};

/// Runs the `dirimult` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Prints an error for `error` to `err` and returns its exit code: bad input
/// maps to kExitValidation, everything else to kExitInternal.
int report_exception(std::exception_ptr error, std::ostream& err);

}  // namespace dirimult
