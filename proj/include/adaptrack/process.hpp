#pragma once

#include <string>
#include <vector>

namespace adaptrack {

struct CommandResult {
    int exit_code = 0;
    std::string output;  // captured standard output
};

/// Single-quotes an argument for /bin/sh.
std::string shell_quote(const std::string& arg);

/// Runs `command` (a shell fragment, may carry its own arguments) followed by
/// the quoted `args`. Standard output is captured; standard error passes through.
CommandResult run_command(const std::string& command, const std::vector<std::string>& args);

/// Like run_command but throws ExternalCommandError on a non-zero exit.
std::string run_command_checked(const std::string& command, const std::vector<std::string>& args);

}  // namespace adaptrack
