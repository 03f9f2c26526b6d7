#pragma once

// Cycle segmentation from R-peak timestamps, scale normalization (per cycle
// or per subject from a motion-free calibration window) and size
// normalization to a fixed model input length.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvsqi/quality_label.hpp"

namespace cvsqi::prep {

inline constexpr std::size_t kTargetLength = 150;
/// 20 s at 100 Hz.
inline constexpr std::size_t kCalibrationSamples = 2000;
inline constexpr std::int64_t kSamplePeriodMs = 10;
/// Sanity bound on normalized amplitudes; normal cycles sit near 1.
inline constexpr double kHeadroom = 10.0;

struct CvsCycle {
    std::string subject_id;
    std::int64_t t_start_ms = 0;
    std::vector<double> samples;  // v >= 2, 10 ms apart
    QualityClass label = QualityClass::Normal;

    std::int64_t duration_ms() const noexcept {
        return samples.empty() ? 0 : static_cast<std::int64_t>(samples.size() - 1) * kSamplePeriodMs;
    }
};

struct CalibrationWindow {
    std::string subject_id;
    std::vector<double> samples;
};

enum class SizeScheme { Interp, Pad };
enum class ScaleMode { Subject, Naive, None };

std::string_view to_string(SizeScheme s) noexcept;
std::string_view to_string(ScaleMode s) noexcept;
/// Throws ParseError on unknown names.
SizeScheme size_scheme_from(std::string_view name);
ScaleMode scale_mode_from(std::string_view name);

struct NormalizedCycle {
    std::string subject_id;
    std::int64_t t_start_ms = 0;
    std::size_t source_length = 0;  // v before size normalization
    QualityClass label = QualityClass::Normal;
    SizeScheme scheme = SizeScheme::Interp;
    std::vector<double> values;
};

bool within_headroom(const NormalizedCycle& c) noexcept;

/// Splits a uniformly sampled stream at consecutive R-peaks. Cycle i covers
/// [r_i, r_{i+1}] inclusive, so neighbours share their boundary sample.
/// Throws PeakOffGrid for peaks off the stream's 10 ms grid or outside it and
/// TooShortCycle when two peaks coincide or go backwards.
std::vector<CvsCycle> segment_cycles(std::span<const std::int64_t> t_ms, std::span<const double> x,
                                     std::span<const std::int64_t> r_peaks_ms, std::string_view subject_id = {});

/// max_i |x_i|; throws AllZeroCycle.
double naive_scale_factor(const CvsCycle& cycle);

/// max |x| over the calibration window; throws AllZeroWindow, and
/// MissingCalibration if the window is not exactly kCalibrationSamples long.
double subject_scale_factor(const CalibrationWindow& cal);

/// Divides every sample by `scale`; throws NonPositiveScale.
CvsCycle scale_normalize(CvsCycle cycle, double scale);

/// Piecewise-linear resampling of the v samples (placed at i / (v - 1) on
/// [0, 1]) at j / (nu - 1), j = 0..nu-1. Endpoints are reproduced exactly.
NormalizedCycle resample_linear(const CvsCycle& cycle, std::size_t nu = kTargetLength);

/// Copies the v samples and repeats the last one up to nu entries.
NormalizedCycle pad_constant(const CvsCycle& cycle, std::size_t nu = kTargetLength);

/// Full per-cycle pipeline shared by training data preparation and online
/// assessment. `subject_scale` is required for ScaleMode::Subject. Cycles
/// longer than kTargetLength are rejected for both schemes.
NormalizedCycle normalize_cycle(const CvsCycle& cycle, ScaleMode mode, std::optional<double> subject_scale,
                                SizeScheme scheme);

}  // namespace cvsqi::prep
