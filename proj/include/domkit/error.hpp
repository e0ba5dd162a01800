#pragma once

#include <stdexcept>
#include <string>

namespace domkit {

enum class ErrorCode {
    invalid_argument,
    not_converged,
    singular,
    boundary_pole,
    evaluation_at_pole,
    too_close,
    grid_too_coarse,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::not_converged: return "not converged";
        case ErrorCode::singular: return "singular";
        case ErrorCode::boundary_pole: return "boundary pole";
        case ErrorCode::evaluation_at_pole: return "evaluation at pole";
        case ErrorCode::too_close: return "point too close to locus";
        case ErrorCode::grid_too_coarse: return "grid too coarse";
    }
    return "unknown";
}

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// True for failures that mean "the test cannot decide" rather than bad input.
    bool inconclusive() const noexcept {
        return code_ == ErrorCode::boundary_pole || code_ == ErrorCode::too_close ||
               code_ == ErrorCode::grid_too_coarse;
    }

   private:
    ErrorCode code_;
};

/// Outcome of a verification that reports a reason instead of throwing.
struct CheckResult {
    bool ok = false;
    std::string reason;

    static CheckResult pass() { return {true, {}}; }
    static CheckResult fail(std::string why) { return {false, std::move(why)}; }

    explicit operator bool() const noexcept { return ok; }
};

}  // namespace domkit
