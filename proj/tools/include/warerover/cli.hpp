#pragma once

#include <iosfwd>

namespace warerover {

// Exit codes: 0 success (including --help), 1 runtime error, 2 bad flags.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// The whole command-line front end; `out` receives results, `err` diagnostics.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace warerover
