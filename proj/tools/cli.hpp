#pragma once

#include <iosfwd>

namespace koopest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Runs one subcommand. Data goes to `out` (or to files named by flags),
/// diagnostics to `err`. Returns the process exit code.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace koopest::cli
