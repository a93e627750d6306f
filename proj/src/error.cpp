#include "bb84sim/error.hpp"

namespace bb84sim {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidState: return "invalid-state";
        case ErrorCode::ZeroNormState: return "zero-norm-state";
        case ErrorCode::InvalidSigma: return "invalid-sigma";
        case ErrorCode::InvalidCount: return "invalid-count";
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::InvalidConfig: return "invalid-config";
        case ErrorCode::InvariantViolation: return "invariant-violation";
    }
    return "unknown-error";
}

}  // namespace bb84sim
