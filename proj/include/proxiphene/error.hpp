#pragma once

#include <stdexcept>
#include <string>

namespace proxiphene {

/// Failure classes surfaced by the pipeline; the CLI maps each onto an exit code.
enum class ErrorKind {
    usage = 1,
    input = 2,
    io = 3,
    model = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error input_error(const std::string& message) { return {ErrorKind::input, message}; }
inline Error io_error(const std::string& message) { return {ErrorKind::io, message}; }
inline Error model_error(const std::string& message) { return {ErrorKind::model, message}; }

}  // namespace proxiphene
