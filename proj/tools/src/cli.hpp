#pragma once

#include <ostream>

namespace ormachine::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Entry point behind the `ormachine` executable. Subcommands: simulate,
/// factorize, complete, benchmark, digits.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ormachine::cli
