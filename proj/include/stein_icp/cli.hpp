#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stein_icp {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitNumerical = 1,
    kExitInput = 2,
};

/// Runs the command-line front end. `args` excludes the program name. Normal output goes
/// to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stein_icp
