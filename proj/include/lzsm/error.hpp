#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lzsm {

enum class ErrorCode {
    InvalidArgument,
    NonFinite,
    NoConvergence,
    BranchAmbiguity,
    SelfConsistencySingular,
    SelfOrthogonal,
    StepUnderflow,
    ZeroState,
    PoleStall,
    WindowTooShort,
    NotClosed,
    ConfigInvalid,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::NonFinite: return "NON_FINITE";
        case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
        case ErrorCode::BranchAmbiguity: return "BRANCH_AMBIGUITY";
        case ErrorCode::SelfConsistencySingular: return "SELF_CONSISTENCY_SINGULAR";
        case ErrorCode::SelfOrthogonal: return "SELF_ORTHOGONAL";
        case ErrorCode::StepUnderflow: return "STEP_UNDERFLOW";
        case ErrorCode::ZeroState: return "ZERO_STATE";
        case ErrorCode::PoleStall: return "POLE_STALL";
        case ErrorCode::WindowTooShort: return "WINDOW_TOO_SHORT";
        case ErrorCode::NotClosed: return "NOT_CLOSED";
        case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
    }
    return "UNKNOWN";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Numerical failures as opposed to bad input.
    bool is_numerical() const noexcept {
        switch (code_) {
            case ErrorCode::InvalidArgument:
            case ErrorCode::ConfigInvalid:
                return false;
            default:
                return true;
        }
    }

private:
    ErrorCode code_;
};

}  // namespace lzsm
