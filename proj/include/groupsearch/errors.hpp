#pragma once

#include <stdexcept>
#include <string>

namespace groupsearch {

enum class ErrorCode {
    MalformedRecord,
    DuplicateId,
    UnknownGroup,
    UnknownPost,
    GroupMismatch,
    EmptyQuery,
    EmptyText,
    DimensionMismatch,
    VersionMismatch,
    MissingPlaceholder,
    EmptyTrainingSet,
    EmptyRounds,
    Timeout,
    BadResponse,
    Config,
    Io,
};

const char* error_code_name(ErrorCode code);

/// All library failures surface as Error carrying a typed code plus a
/// human-readable message. Callers that care about the failure class
/// dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord:
            return "MalformedRecord";
        case ErrorCode::DuplicateId:
            return "DuplicateId";
        case ErrorCode::UnknownGroup:
            return "UnknownGroup";
        case ErrorCode::UnknownPost:
            return "UnknownPost";
        case ErrorCode::GroupMismatch:
            return "GroupMismatch";
        case ErrorCode::EmptyQuery:
            return "EmptyQuery";
        case ErrorCode::EmptyText:
            return "EmptyText";
        case ErrorCode::DimensionMismatch:
            return "DimensionMismatch";
        case ErrorCode::VersionMismatch:
            return "VersionMismatch";
        case ErrorCode::MissingPlaceholder:
            return "MissingPlaceholder";
        case ErrorCode::EmptyTrainingSet:
            return "EmptyTrainingSet";
        case ErrorCode::EmptyRounds:
            return "EmptyRounds";
        case ErrorCode::Timeout:
            return "Timeout";
        case ErrorCode::BadResponse:
            return "BadResponse";
        case ErrorCode::Config:
            return "Config";
        case ErrorCode::Io:
            return "Io";
    }
    return "Unknown";
}

}  // namespace groupsearch
