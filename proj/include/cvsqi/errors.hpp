#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvsqi {

enum class ErrorCode {
    // eit-forward
    ZeroRealPart,
    InvalidScenario,
    // preprocessing
    PeakOffGrid,
    TooShortCycle,
    AllZeroCycle,
    AllZeroWindow,
    NonPositiveScale,
    CycleLongerThanTarget,
    // nn-core
    ShapeMismatch,
    GraphNotRecorded,
    // models
    SingleClassDataset,
    EmptySplit,
    NotConvolutional,
    InsufficientSamples,
    NotFitted,
    NonPositiveSigma,
    ContainsNegativeSamples,
    ThresholdUnset,
    // evaluation
    LengthMismatch,
    UndefinedMetric,
    TooFewSubjects,
    // cli-io
    SchemeMismatch,
    MissingCalibration,
    VersionMismatch,
    CorruptFile,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is reported through this type. The code is stable;
/// the message carries context (offending index, file name, versions).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }

    /// Process exit code used by the CLI: 3 for I/O failures, 2 otherwise.
    int exit_code() const noexcept;

private:
    ErrorCode code_;
};

}  // namespace cvsqi
