#pragma once

// Voltage -> transconductance -> cardiac volume signal math for a 16-electrode
// adjacent-drive EIT system, plus an additive surrogate generator for
// motion-free and motion-corrupted measurement streams.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvsqi/quality_label.hpp"

namespace cvsqi::eit {

inline constexpr std::size_t kElectrodes = 16;
/// 16 injections x 13 retained adjacent-pair voltages.
inline constexpr std::size_t kChannels = 208;
inline constexpr std::int64_t kSamplePeriodMs = 10;

using ChannelVector = std::vector<double>;

/// Channel index m -> (injection j, measurement pair k), both 1-based. For
/// each j the pairs k in {j-1, j, j+1} (cyclic) are skipped.
std::pair<int, int> channel_pair(std::size_t m);

struct VoltageFrame {
    std::int64_t t_ms = 0;
    std::vector<std::complex<double>> values;  // kChannels entries
    double current_ma = 1.0;
};

/// Additive breakdown of a synthetic frame's deviation from its reference.
struct GComponents {
    ChannelVector air;
    ChannelVector blood;
    ChannelVector motion;
    ChannelVector gdot;  // air + blood + motion
};

struct TransconductanceFrame {
    std::int64_t t_ms = 0;
    ChannelVector g;  // mS
    std::optional<GComponents> components;
};

struct LeadformVector {
    ChannelVector w;
};

/// Throws InvalidScenario (wrong length, non-finite, all-zero).
void validate(const LeadformVector& w);

/// g[m] = I / Re(V[m]). Throws ZeroRealPart naming the first offending index.
TransconductanceFrame transconductance_from_voltages(const VoltageFrame& frame);

/// g_t - g_ref componentwise.
ChannelVector time_difference(const TransconductanceFrame& g_t, const TransconductanceFrame& g_ref);

/// w^T gdot.
double extract_cvs(std::span<const double> gdot, const LeadformVector& w);

/// Step: constant offset. Ramp: linear drift. Burst: oscillation.
/// Bump: single raised-cosine swell over the event. Gain: a copy of the
/// cardiogenic waveform, i.e. a change in the beat's apparent amplitude.
enum class MotionShape { Step, Ramp, Burst, Bump, Gain };

struct MotionEvent {
    std::int64_t start_ms = 0;
    std::int64_t duration_ms = 0;
    /// Peak CVS deflection in units of the subject's cardiogenic peak.
    double amplitude = 0.0;
    MotionShape shape = MotionShape::Step;
};

struct SynthScenario {
    std::string subject_id = "S000";
    std::uint64_t subject_seed = 0;
    std::int64_t duration_ms = 0;
    /// Per-beat RR intervals, multiples of 10 ms in [300, 2000]; reused
    /// cyclically when the stream outlasts the list.
    std::vector<std::int64_t> rr_ms;
    double respiration_period_ms = 4000.0;
    std::vector<MotionEvent> motion_events;
    /// Measurement noise std of the CVS as a fraction of the cardiogenic peak.
    double noise_std = 0.02;
    /// Peak of the cardiogenic CVS component (raw CVS units).
    double cardiac_amplitude = 1.0;
    /// Relative std of the per-beat cardiogenic peak (clamped to +-50%).
    double beat_amplitude_jitter = 0.0;
    /// Relative motion amplitude at or above which a cycle is Ambiguous.
    double ambiguous_fraction = 0.5;
    /// Relative motion amplitude above which a cycle is MotionInfluenced.
    double motion_fraction = 1.5;
};

/// Throws InvalidScenario describing the first violated precondition.
void validate(const SynthScenario& s);

struct SynthOptions {
    /// Keep the 208-channel voltage and transconductance frames. Dataset
    /// generation only needs the CVS and turns this off.
    bool store_frames = true;
};

struct SynthStream {
    std::string subject_id;
    LeadformVector w;
    TransconductanceFrame reference;  // g at t0, no deviation
    std::vector<VoltageFrame> voltages;
    std::vector<TransconductanceFrame> frames;
    std::vector<std::int64_t> t_ms;
    std::vector<double> cvs;         // x_t = w^T (g_t - g_ref)
    std::vector<double> cvs_motion;  // w^T gdot_motion, for bookkeeping
    std::vector<std::int64_t> r_peaks_ms;
    /// Cycle i spans [r_peaks[i], r_peaks[i + 1]].
    std::vector<QualityClass> cycle_labels;
    std::vector<double> cycle_motion_level;  // max |x_motion| / cardiac peak
};

/// Cardiogenic waveform over one cycle, phase in [0, 1]: raised-cosine rise to
/// 1 over the first `rise_fraction`, raised-cosine decay back to 0.
double cardiogenic_template(double phase, double rise_fraction);

SynthStream synthesize_stream(const SynthScenario& scenario, const SynthOptions& options = {});

/// Labels cycles from per-sample motion deflection; exposed for bookkeeping
/// checks. `level[i]` is max |motion| / peak over the samples of cycle i.
std::vector<QualityClass> label_cycles(std::span<const std::int64_t> t_ms, std::span<const double> cvs_motion,
                                       std::span<const std::int64_t> r_peaks_ms, double cardiac_peak,
                                       double ambiguous_fraction, double motion_fraction,
                                       std::vector<double>* level = nullptr);

}  // namespace cvsqi::eit
