#pragma once

#include <iosfwd>

namespace affectlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand: train, eval, ablate, replay, interact,
/// baseline or show-config. Returns the process exit code; never throws.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace affectlab::cli
