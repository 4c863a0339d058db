#pragma once

#include <iosfwd>

namespace adaptrack::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, external = 3 };

/// Parses argv, runs the chosen subcommand and maps failures to an exit code.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adaptrack::cli
