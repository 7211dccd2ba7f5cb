#pragma once

#include <iosfwd>

namespace drdcbf {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

/// Entry point of the `drdcbf` tool: subcommands simulate, sweep, verify and
/// plot. Human-readable text goes to `out` / `err`; the exit code is the
/// machine contract.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drdcbf
