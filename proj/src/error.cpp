#include "psp/error.hpp"

namespace psp {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ColumnOutOfRange: return "ColumnOutOfRange";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptySignal: return "EmptySignal";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::DivisionByZeroDepth: return "DivisionByZeroDepth";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::NearZeroMagnitude: return "NearZeroMagnitude";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace psp
