#include "error.hpp"

namespace tcsdp {

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::InvalidObjective: return "InvalidObjective";
        case ErrorCode::InvalidCertificate: return "InvalidCertificate";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::ChannelEntryViolation: return "ChannelEntryViolation";
        case ErrorCode::InvalidBlock: return "InvalidBlock";
        case ErrorCode::InvalidBinding: return "InvalidBinding";
        case ErrorCode::DegenerateScenario: return "DegenerateScenario";
        case ErrorCode::NotRankOne: return "NotRankOne";
        case ErrorCode::ExtractionFailed: return "ExtractionFailed";
        case ErrorCode::NumericalFailure: return "NumericalFailure";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace tcsdp
