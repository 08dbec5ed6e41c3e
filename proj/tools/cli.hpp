#pragma once

#include <iosfwd>

namespace yowo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand. Reports go to `out`, diagnostics and
/// help on usage errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace yowo::cli
