#include "svf/error.hpp"

namespace svf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonpositiveVariance: return "NonpositiveVariance";
        case ErrorCode::NonstationaryParams: return "NonstationaryParams";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::InvalidShockWindow: return "InvalidShockWindow";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::BlockCountMismatch: return "BlockCountMismatch";
        case ErrorCode::NonpositiveInput: return "NonpositiveInput";
        case ErrorCode::NonpositiveGroundTruth: return "NonpositiveGroundTruth";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ReplicationFailed: return "ReplicationFailed";
        case ErrorCode::ConfigurationInfeasible: return "ConfigurationInfeasible";
        case ErrorCode::Validation: return "Validation";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

bool is_validation_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParams:
        case ErrorCode::InvalidShockWindow:
        case ErrorCode::InsufficientHistory:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::BlockCountMismatch:
        case ErrorCode::NonpositiveInput:
        case ErrorCode::NonpositiveGroundTruth:
        case ErrorCode::ConfigurationInfeasible:
        case ErrorCode::Validation:
        case ErrorCode::Io:
            return true;
        default:
            return false;
    }
}

}  // namespace svf
