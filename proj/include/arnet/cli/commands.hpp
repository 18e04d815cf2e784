#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arnet::cli {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitData = 3 };

/// Runs the `arnet` command line. `args[0]` is the program name. Results go
/// to `out`, diagnostics to `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arnet::cli
