#pragma once

#include <stdexcept>
#include <string>

namespace tcsdp {

// Numeric values are part of the C ABI (see include/tcsdp/tcsdp.h).
enum class ErrorCode : int {
    Ok = 0,
    InvalidInput = 1,
    InvalidObjective = 2,
    InvalidCertificate = 3,
    DegenerateSpectrum = 4,
    ChannelEntryViolation = 5,
    InvalidBlock = 6,
    InvalidBinding = 7,
    DegenerateScenario = 8,
    NotRankOne = 9,
    ExtractionFailed = 10,
    NumericalFailure = 11,
    Infeasible = 12,
    Io = 13,
    Internal = 99,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tcsdp
