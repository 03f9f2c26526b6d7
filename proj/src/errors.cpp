#include "cvsqi/errors.hpp"

namespace cvsqi {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroRealPart: return "ZeroRealPart";
        case ErrorCode::InvalidScenario: return "InvalidScenario";
        case ErrorCode::PeakOffGrid: return "PeakOffGrid";
        case ErrorCode::TooShortCycle: return "TooShortCycle";
        case ErrorCode::AllZeroCycle: return "AllZeroCycle";
        case ErrorCode::AllZeroWindow: return "AllZeroWindow";
        case ErrorCode::NonPositiveScale: return "NonPositiveScale";
        case ErrorCode::CycleLongerThanTarget: return "CycleLongerThanTarget";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::GraphNotRecorded: return "GraphNotRecorded";
        case ErrorCode::SingleClassDataset: return "SingleClassDataset";
        case ErrorCode::EmptySplit: return "EmptySplit";
        case ErrorCode::NotConvolutional: return "NotConvolutional";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::NotFitted: return "NotFitted";
        case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
        case ErrorCode::ContainsNegativeSamples: return "ContainsNegativeSamples";
        case ErrorCode::ThresholdUnset: return "ThresholdUnset";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::UndefinedMetric: return "UndefinedMetric";
        case ErrorCode::TooFewSubjects: return "TooFewSubjects";
        case ErrorCode::SchemeMismatch: return "SchemeMismatch";
        case ErrorCode::MissingCalibration: return "MissingCalibration";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

int Error::exit_code() const noexcept {
    return code_ == ErrorCode::IoError ? 3 : 2;
}

}  // namespace cvsqi
