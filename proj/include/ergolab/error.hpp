#pragma once

#include <stdexcept>
#include <string>

namespace ergolab {

enum class ErrorCode {
    IllegalPoint,
    NonPositiveRadius,
    UnknownSystem,
    InvalidSystem,
    EmptySchedule,
    NonPositiveEntry,
    IndexOutOfRange,
    InvalidParams,
    NotFixedPoint,
    ModulusTooLarge,
    HorizonTooShort,
    LiftFailed,
    UnsupportedSystem,
    InvalidEpsilon,
    SearchFailed,
    SeparationFailure,
    FamilyMismatch,
    Overflow,
    ParseError,
    ConfigError,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::IllegalPoint: return "IllegalPoint";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::UnknownSystem: return "UnknownSystem";
    case ErrorCode::InvalidSystem: return "InvalidSystem";
    case ErrorCode::EmptySchedule: return "EmptySchedule";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NotFixedPoint: return "NotFixedPoint";
    case ErrorCode::ModulusTooLarge: return "ModulusTooLarge";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::LiftFailed: return "LiftFailed";
    case ErrorCode::UnsupportedSystem: return "UnsupportedSystem";
    case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::SearchFailed: return "SearchFailed";
    case ErrorCode::SeparationFailure: return "SeparationFailure";
    case ErrorCode::FamilyMismatch: return "FamilyMismatch";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code logic) can branch without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace ergolab
