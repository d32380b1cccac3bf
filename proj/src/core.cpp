#include "dml/core.hpp"

namespace dml {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateRole: return "DuplicateRole";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::InvalidFoldCount: return "InvalidFoldCount";
        case ErrorCode::NotAPartition: return "NotAPartition";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::SeparationDetected: return "SeparationDetected";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::BadCustomReturn: return "BadCustomReturn";
        case ErrorCode::PropensityOutOfRange: return "PropensityOutOfRange";
        case ErrorCode::ZeroTreatedShare: return "ZeroTreatedShare";
        case ErrorCode::DegenerateFold: return "DegenerateFold";
        case ErrorCode::DegenerateScore: return "DegenerateScore";
        case ErrorCode::InvalidLevel: return "InvalidLevel";
        case ErrorCode::BootstrapNotRun: return "BootstrapNotRun";
        case ErrorCode::FitNotRun: return "FitNotRun";
        case ErrorCode::InvalidPValue: return "InvalidPValue";
        case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
        case ErrorCode::NoInstrument: return "NoInstrument";
        case ErrorCode::EmptyArm: return "EmptyArm";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace dml
