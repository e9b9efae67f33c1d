#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vaemir::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericalError = 3;

// Runs `vaemir <subcommand> [flags]` with `args` excluding the program name.
// Subcommands: generate, train-vae, score, eval, sweep-k.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vaemir::cli
