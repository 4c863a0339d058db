#include <adaptrack/error.hpp>
#include <adaptrack/process.hpp>

#include <spdlog/spdlog.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>

namespace adaptrack {

std::string shell_quote(const std::string& arg) {
    std::string out = "'";
    for (char c : arg) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

CommandResult run_command(const std::string& command, const std::vector<std::string>& args) {
    if (command.empty()) {
        throw ExternalCommandError("empty external command", -1);
    }
    std::string line = command;
    for (const auto& a : args) {
        line += ' ';
        line += shell_quote(a);
    }
    spdlog::debug("exec: {}", line);

    std::fflush(nullptr);
    FILE* pipe = ::popen(line.c_str(), "r");
    if (pipe == nullptr) {
        throw ExternalCommandError("cannot start: " + line, -1);
    }
    CommandResult result;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        result.output.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    if (status == -1) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else {
        result.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }
    return result;
}

std::string run_command_checked(const std::string& command, const std::vector<std::string>& args) {
    auto result = run_command(command, args);
    if (result.exit_code != 0) {
        throw ExternalCommandError("command '" + command + "' exited with status " +
                                       std::to_string(result.exit_code),
                                   result.exit_code);
    }
    return std::move(result.output);
}

}  // namespace adaptrack
