#pragma once

#include <stdexcept>
#include <string>

namespace pitchcov {

enum class ErrorCode {
    MalformedWav,
    UnsupportedFormat,
    IoError,
    InvalidRange,
    RateTooLow,
    EmptyInput,
    NonPositiveBase,
    ParamOutOfRange,
    UnstableFilter,
    NoVoicedFrames,
    TooFewSamples,
    DimensionMismatch,
    LengthMismatch,
    ConstantInput,
    EmptyCorpus,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::RateTooLow: return "RateTooLow";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveBase: return "NonPositiveBase";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::UnstableFilter: return "UnstableFilter";
    case ErrorCode::NoVoicedFrames: return "NoVoicedFrames";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pitchcov
