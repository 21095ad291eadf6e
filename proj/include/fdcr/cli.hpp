#pragma once

#include <iosfwd>

namespace fdcr::cli {

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiscrepant = 3;

/// Command-line front end: analytic, simulate, compare, sweep, dump-fsm.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fdcr::cli
