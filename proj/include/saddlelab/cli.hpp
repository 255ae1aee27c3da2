#pragma once

#include <ostream>

namespace saddlelab {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRunErrors = 3;

/// Entry point behind the `saddlelab` binary: subcommands run, scan, bounds
/// and traj. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace saddlelab
