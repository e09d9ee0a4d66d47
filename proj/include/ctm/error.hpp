#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctm {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input violates an operation's precondition or a data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical procedure failed to produce a usable result (divergence, degenerate data).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Pipeline configuration is invalid; `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A pipeline stage was run before one of its upstream stages.
class MissingStageError : public Error {
public:
    explicit MissingStageError(const std::string& stage, const std::string& detail = {})
        : Error("missing artifacts of stage '" + stage + "'; run stage '" + stage + "' first" +
                (detail.empty() ? std::string{} : " (" + detail + ")")),
          stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace ctm
