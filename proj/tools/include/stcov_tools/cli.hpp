#pragma once

#include <string>
#include <vector>

namespace stcov::tools {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `stcov` with the given arguments (program name excluded) and returns
/// the process exit code. Errors are reported on standard error.
int run_cli(const std::vector<std::string>& args);

}  // namespace stcov::tools
