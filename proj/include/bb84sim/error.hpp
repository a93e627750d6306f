#pragma once

#include <stdexcept>
#include <string>

namespace bb84sim {

enum class ErrorCode {
    InvalidState,
    ZeroNormState,
    InvalidSigma,
    InvalidCount,
    InvalidArgument,
    InvalidConfig,
    InvariantViolation,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; `code()` lets callers
// (the CLI in particular) map failures to exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bb84sim
