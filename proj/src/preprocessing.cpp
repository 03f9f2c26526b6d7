#include "cvsqi/preprocessing.hpp"

#include <algorithm>
#include <cmath>

#include "cvsqi/errors.hpp"

namespace cvsqi::prep {

namespace {

double max_abs(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
}

NormalizedCycle shell(const CvsCycle& c, SizeScheme scheme) {
    NormalizedCycle n;
    n.subject_id = c.subject_id;
    n.t_start_ms = c.t_start_ms;
    n.source_length = c.samples.size();
    n.label = c.label;
    n.scheme = scheme;
    return n;
}

}  // namespace

std::string_view to_string(SizeScheme s) noexcept { return s == SizeScheme::Interp ? "interp" : "pad"; }

std::string_view to_string(ScaleMode s) noexcept {
    switch (s) {
        case ScaleMode::Subject: return "subject";
        case ScaleMode::Naive: return "naive";
        case ScaleMode::None: return "none";
    }
    return "?";
}

SizeScheme size_scheme_from(std::string_view name) {
    if (name == "interp") return SizeScheme::Interp;
    if (name == "pad") return SizeScheme::Pad;
    throw Error(ErrorCode::ParseError, "unknown size scheme '" + std::string(name) + "'");
}

ScaleMode scale_mode_from(std::string_view name) {
    if (name == "subject") return ScaleMode::Subject;
    if (name == "naive") return ScaleMode::Naive;
    if (name == "none") return ScaleMode::None;
    throw Error(ErrorCode::ParseError, "unknown scale mode '" + std::string(name) + "'");
}

bool within_headroom(const NormalizedCycle& c) noexcept { return max_abs(c.values) <= kHeadroom; }

std::vector<CvsCycle> segment_cycles(std::span<const std::int64_t> t_ms, std::span<const double> x,
                                     std::span<const std::int64_t> r_peaks_ms, std::string_view subject_id) {
    if (t_ms.size() != x.size())
        throw Error(ErrorCode::LengthMismatch, "stream has " + std::to_string(t_ms.size()) + " times and " +
                                                   std::to_string(x.size()) + " values");
    std::vector<CvsCycle> cycles;
    if (r_peaks_ms.size() < 2) return cycles;
    if (t_ms.empty()) throw Error(ErrorCode::PeakOffGrid, "stream is empty");
    const std::int64_t t0 = t_ms.front();
    auto index_of = [&](std::int64_t r) {
        if ((r - t0) % kSamplePeriodMs != 0 || r < t0)
            throw Error(ErrorCode::PeakOffGrid, "R-peak at " + std::to_string(r) + " ms is off the 10 ms grid");
        const auto i = static_cast<std::size_t>((r - t0) / kSamplePeriodMs);
        if (i >= t_ms.size() || t_ms[i] != r)
            throw Error(ErrorCode::PeakOffGrid, "R-peak at " + std::to_string(r) + " ms is outside the stream");
        return i;
    };
    cycles.reserve(r_peaks_ms.size() - 1);
    for (std::size_t k = 0; k + 1 < r_peaks_ms.size(); ++k) {
        const std::size_t a = index_of(r_peaks_ms[k]);
        const std::size_t b = index_of(r_peaks_ms[k + 1]);
        if (b <= a)
            throw Error(ErrorCode::TooShortCycle, "R-peaks at " + std::to_string(r_peaks_ms[k]) + " and " +
                                                      std::to_string(r_peaks_ms[k + 1]) + " ms give fewer than 2 samples");
        CvsCycle c;
        c.subject_id = std::string(subject_id);
        c.t_start_ms = r_peaks_ms[k];
        c.samples.assign(x.begin() + static_cast<long>(a), x.begin() + static_cast<long>(b) + 1);
        cycles.push_back(std::move(c));
    }
    return cycles;
}

double naive_scale_factor(const CvsCycle& cycle) {
    const double s = max_abs(cycle.samples);
    if (!(s > 0.0)) throw Error(ErrorCode::AllZeroCycle, "cycle at " + std::to_string(cycle.t_start_ms) + " ms");
    return s;
}

double subject_scale_factor(const CalibrationWindow& cal) {
    if (cal.samples.size() != kCalibrationSamples)
        throw Error(ErrorCode::MissingCalibration, "calibration window for '" + cal.subject_id + "' has " +
                                                       std::to_string(cal.samples.size()) + " samples, expected 2000");
    const double s = max_abs(cal.samples);
    if (!(s > 0.0)) throw Error(ErrorCode::AllZeroWindow, "subject '" + cal.subject_id + "'");
    return s;
}

CvsCycle scale_normalize(CvsCycle cycle, double scale) {
    if (!(scale > 0.0)) throw Error(ErrorCode::NonPositiveScale, std::to_string(scale));
    for (double& v : cycle.samples) v /= scale;
    return cycle;
}

NormalizedCycle resample_linear(const CvsCycle& cycle, std::size_t nu) {
    const std::size_t v = cycle.samples.size();
    if (v < 2) throw Error(ErrorCode::TooShortCycle, "resampling needs at least 2 samples, got " + std::to_string(v));
    if (nu < 2) throw Error(ErrorCode::ShapeMismatch, "target length must be at least 2");
    NormalizedCycle out = shell(cycle, SizeScheme::Interp);
    out.values.resize(nu);
    const auto& x = cycle.samples;
    // Grid position j * (v-1) / (nu-1) kept as an exact rational.
    const std::size_t den = nu - 1;
    for (std::size_t j = 0; j < nu; ++j) {
        const std::size_t num = j * (v - 1);
        const std::size_t i = num / den;
        const std::size_t rem = num % den;
        if (rem == 0) {
            out.values[j] = x[i];
            continue;
        }
        const double f = static_cast<double>(rem) / static_cast<double>(den);
        const double a = x[i], b = x[i + 1];
        const double y = (1.0 - f) * a + f * b;
        out.values[j] = std::clamp(y, std::min(a, b), std::max(a, b));
    }
    return out;
}

NormalizedCycle pad_constant(const CvsCycle& cycle, std::size_t nu) {
    const std::size_t v = cycle.samples.size();
    if (v == 0) throw Error(ErrorCode::TooShortCycle, "empty cycle");
    if (v > nu)
        throw Error(ErrorCode::CycleLongerThanTarget,
                    "cycle at " + std::to_string(cycle.t_start_ms) + " ms has " + std::to_string(v) + " samples > " +
                        std::to_string(nu));
    NormalizedCycle out = shell(cycle, SizeScheme::Pad);
    out.values = cycle.samples;
    out.values.resize(nu, cycle.samples.back());
    return out;
}

NormalizedCycle normalize_cycle(const CvsCycle& cycle, ScaleMode mode, std::optional<double> subject_scale,
                                SizeScheme scheme) {
    if (cycle.samples.size() > kTargetLength)
        throw Error(ErrorCode::CycleLongerThanTarget,
                    "cycle at " + std::to_string(cycle.t_start_ms) + " ms has " +
                        std::to_string(cycle.samples.size()) + " samples > 150");
    CvsCycle scaled;
    switch (mode) {
        case ScaleMode::Subject:
            if (!subject_scale)
                throw Error(ErrorCode::MissingCalibration, "no subject scale for '" + cycle.subject_id + "'");
            scaled = scale_normalize(cycle, *subject_scale);
            break;
        case ScaleMode::Naive: scaled = scale_normalize(cycle, naive_scale_factor(cycle)); break;
        case ScaleMode::None: scaled = cycle; break;
    }
    return scheme == SizeScheme::Interp ? resample_linear(scaled) : pad_constant(scaled);
}

}  // namespace cvsqi::prep
