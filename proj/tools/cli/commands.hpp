#pragma once

namespace das::cli {

// Parses argv and executes one subcommand. Exit codes: 0 success, 1 runtime
// failure, 2 usage or configuration errors.
int run_cli(int argc, const char* const* argv);

}  // namespace das::cli
