#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace optpolicy {

enum class ErrorCode {
    MissingColumn,
    NoTreatments,
    EmptyAfterCleaning,
    NonFiniteScore,
    InvalidSchema,
    BadProportions,
    SpecMismatch,
    SchemaVersionUnsupported,
    MalformedTree,
    DimensionMismatch,
    TooFewRows,
    InvalidConfig,
    Infeasible,
    BadShares,
    LengthMismatch,
    BadSpec,
    SearchTimeout,
    Io,
    InvariantViolation,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NoTreatments: return "NoTreatments";
        case ErrorCode::EmptyAfterCleaning: return "EmptyAfterCleaning";
        case ErrorCode::NonFiniteScore: return "NonFiniteScore";
        case ErrorCode::InvalidSchema: return "InvalidSchema";
        case ErrorCode::BadProportions: return "BadProportions";
        case ErrorCode::SpecMismatch: return "SpecMismatch";
        case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
        case ErrorCode::MalformedTree: return "MalformedTree";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::BadShares: return "BadShares";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::BadSpec: return "BadSpec";
        case ErrorCode::SearchTimeout: return "SearchTimeout";
        case ErrorCode::Io: return "Io";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace optpolicy
