#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adaptrack {

/// Base for every data-level failure (bad files, violated invariants).
/// The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

/// A child process exited non-zero or printed something unusable.
/// The CLI maps these to exit code 3.
class ExternalCommandError : public std::runtime_error {
public:
    ExternalCommandError(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}

    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

}  // namespace adaptrack
