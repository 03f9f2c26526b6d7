#include "cvsqi/eit_forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "cvsqi/errors.hpp"

namespace cvsqi::eit {

namespace {

// Surrogate constants (mS). The cardiogenic channel pattern is small next to
// the baseline so that motion deflections keep every g strictly positive.
constexpr double kBaselineMin = 50.0;
constexpr double kBaselineMax = 100.0;
constexpr double kBloodPatternNorm = 0.1;
constexpr double kAirPatternNorm = 2.0;

void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

ChannelVector random_direction(std::mt19937_64& rng, double norm) {
    std::normal_distribution<double> n01(0.0, 1.0);
    ChannelVector v(kChannels);
    double ss = 0.0;
    for (double& x : v) {
        x = n01(rng);
        ss += x * x;
    }
    const double s = norm / std::sqrt(ss);
    for (double& x : v) x *= s;
    return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// w with w^T p_air = 0 and w^T p_blood = 1 (one Gram-Schmidt step).
ChannelVector leadform_for(const ChannelVector& p_air, const ChannelVector& p_blood) {
    const double aa = dot(p_air, p_air);
    const double ab = dot(p_air, p_blood);
    ChannelVector q(kChannels);
    for (std::size_t i = 0; i < kChannels; ++i) q[i] = p_blood[i] - (ab / aa) * p_air[i];
    const double scale = dot(q, p_blood);
    for (double& x : q) x /= scale;
    return q;
}

struct PreparedEvent {
    MotionEvent spec;
    double sign = 1.0;
    double burst_hz = 0.0;
    ChannelVector mixing;  // w^T mixing = 1
};

double event_shape(const PreparedEvent& e, std::int64_t t_ms, double cardiac_shape) {
    if (t_ms < e.spec.start_ms || t_ms >= e.spec.start_ms + e.spec.duration_ms) return 0.0;
    const double tau = static_cast<double>(t_ms - e.spec.start_ms);
    switch (e.spec.shape) {
        case MotionShape::Step: return e.sign;
        case MotionShape::Ramp: return e.sign * tau / static_cast<double>(e.spec.duration_ms);
        case MotionShape::Burst: return e.sign * std::sin(2.0 * std::numbers::pi * e.burst_hz * tau / 1000.0);
        case MotionShape::Bump:
            return e.sign * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * tau / static_cast<double>(e.spec.duration_ms)));
        case MotionShape::Gain: return e.sign * cardiac_shape;
    }
    return 0.0;
}

}  // namespace

std::pair<int, int> channel_pair(std::size_t m) {
    if (m >= kChannels) throw Error(ErrorCode::ShapeMismatch, "channel index " + std::to_string(m));
    const int j = static_cast<int>(m / 13) + 1;
    int slot = static_cast<int>(m % 13);
    // Walk k = j+2, j+3, ... (cyclic), which skips j-1, j, j+1.
    int k = (j + 1 + slot) % 16 + 1;
    return {j, k};
}

void validate(const LeadformVector& w) {
    if (w.w.size() != kChannels)
        invalid("leadform vector has " + std::to_string(w.w.size()) + " entries, expected 208");
    bool any = false;
    for (double x : w.w) {
        if (!std::isfinite(x)) invalid("leadform vector has a non-finite entry");
        any = any || x != 0.0;
    }
    if (!any) invalid("leadform vector is all zero");
}

TransconductanceFrame transconductance_from_voltages(const VoltageFrame& frame) {
    if (frame.values.size() != kChannels)
        throw Error(ErrorCode::ShapeMismatch, "voltage frame has " + std::to_string(frame.values.size()) + " entries");
    TransconductanceFrame out;
    out.t_ms = frame.t_ms;
    out.g.resize(kChannels);
    for (std::size_t m = 0; m < kChannels; ++m) {
        const double re = frame.values[m].real();
        if (re == 0.0) throw Error(ErrorCode::ZeroRealPart, "channel " + std::to_string(m));
        out.g[m] = frame.current_ma / re;
    }
    return out;
}

ChannelVector time_difference(const TransconductanceFrame& g_t, const TransconductanceFrame& g_ref) {
    if (g_t.g.size() != g_ref.g.size())
        throw Error(ErrorCode::ShapeMismatch, "frames differ in channel count");
    ChannelVector d(g_t.g.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = g_t.g[i] - g_ref.g[i];
    return d;
}

double extract_cvs(std::span<const double> gdot, const LeadformVector& w) {
    if (gdot.size() != w.w.size())
        throw Error(ErrorCode::ShapeMismatch, "gdot has " + std::to_string(gdot.size()) + " entries, w has " +
                                                  std::to_string(w.w.size()));
    return dot(w.w, gdot);
}

double cardiogenic_template(double phase, double rise_fraction) {
    phase = std::clamp(phase, 0.0, 1.0);
    if (phase < rise_fraction) return 0.5 * (1.0 - std::cos(std::numbers::pi * phase / rise_fraction));
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (phase - rise_fraction) / (1.0 - rise_fraction)));
}

void validate(const SynthScenario& s) {
    if (s.duration_ms <= 0) invalid("duration must be positive");
    if (s.duration_ms % kSamplePeriodMs != 0) invalid("duration must be a multiple of 10 ms");
    if (s.rr_ms.empty()) invalid("heart-rate profile is empty");
    for (auto rr : s.rr_ms) {
        if (rr < 300 || rr > 2000) invalid("RR interval " + std::to_string(rr) + " ms outside [300, 2000]");
        if (rr % kSamplePeriodMs != 0) invalid("RR interval " + std::to_string(rr) + " ms is off the 10 ms grid");
    }
    if (!(s.respiration_period_ms > 0.0)) invalid("respiration period must be positive");
    if (!(s.noise_std >= 0.0)) invalid("noise_std must be nonnegative");
    if (!(s.cardiac_amplitude > 0.0)) invalid("cardiac amplitude must be positive");
    if (!(s.beat_amplitude_jitter >= 0.0)) invalid("beat amplitude jitter must be nonnegative");
    if (!(s.ambiguous_fraction >= 0.0 && s.ambiguous_fraction <= s.motion_fraction))
        invalid("label fractions must satisfy 0 <= ambiguous <= motion");
    for (const auto& e : s.motion_events) {
        if (e.start_ms < 0 || e.duration_ms <= 0 || e.start_ms + e.duration_ms > s.duration_ms)
            invalid("motion event [" + std::to_string(e.start_ms) + ", +" + std::to_string(e.duration_ms) +
                    ") is not inside the stream");
        if (!(e.amplitude >= 0.0) || !std::isfinite(e.amplitude)) invalid("motion amplitude must be nonnegative");
    }
}

std::vector<QualityClass> label_cycles(std::span<const std::int64_t> t_ms, std::span<const double> cvs_motion,
                                       std::span<const std::int64_t> r_peaks_ms, double cardiac_peak,
                                       double ambiguous_fraction, double motion_fraction, std::vector<double>* level) {
    std::vector<QualityClass> labels;
    if (level) level->clear();
    if (t_ms.empty() || r_peaks_ms.size() < 2) return labels;
    const std::int64_t t0 = t_ms.front();
    for (std::size_t i = 0; i + 1 < r_peaks_ms.size(); ++i) {
        const auto a = static_cast<std::size_t>((r_peaks_ms[i] - t0) / kSamplePeriodMs);
        const auto b = static_cast<std::size_t>((r_peaks_ms[i + 1] - t0) / kSamplePeriodMs);
        double peak = 0.0;
        for (std::size_t k = a; k <= b && k < cvs_motion.size(); ++k) peak = std::max(peak, std::abs(cvs_motion[k]));
        const double rel = peak / cardiac_peak;
        if (level) level->push_back(rel);
        if (rel > motion_fraction)
            labels.push_back(QualityClass::MotionInfluenced);
        else if (rel >= ambiguous_fraction && rel > 0.0)
            labels.push_back(QualityClass::Ambiguous);
        else
            labels.push_back(QualityClass::Normal);
    }
    return labels;
}

SynthStream synthesize_stream(const SynthScenario& sc, const SynthOptions& options) {
    validate(sc);
    std::mt19937_64 rng(sc.subject_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // Subject geometry.
    ChannelVector g0(kChannels), imag_ratio(kChannels);
    for (auto& x : g0) x = kBaselineMin + (kBaselineMax - kBaselineMin) * u01(rng);
    for (auto& x : imag_ratio) x = 0.05 + 0.15 * u01(rng);
    const ChannelVector p_air = random_direction(rng, kAirPatternNorm);
    const ChannelVector p_blood = random_direction(rng, kBloodPatternNorm);
    const double rise_fraction = 0.25 + 0.10 * u01(rng);
    const double resp_gain = 0.5 + u01(rng);
    const double resp_phase = 2.0 * std::numbers::pi * u01(rng);

    SynthStream out;
    out.subject_id = sc.subject_id;
    out.w.w = leadform_for(p_air, p_blood);
    const double w_norm = std::sqrt(dot(out.w.w, out.w.w));
    const double g0_min = *std::min_element(g0.begin(), g0.end());
    out.reference.t_ms = 0;
    out.reference.g = g0;

    // Motion events: one coherent channel-mixing direction per event, scaled
    // so its CVS projection is exactly the event shape.
    std::vector<PreparedEvent> events;
    for (const auto& spec : sc.motion_events) {
        PreparedEvent e;
        e.spec = spec;
        e.sign = u01(rng) < 0.5 ? -1.0 : 1.0;
        e.burst_hz = 2.0 + 4.0 * u01(rng);
        const double peak = spec.amplitude * sc.cardiac_amplitude;
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            ChannelVector m = random_direction(rng, 1.0);
            const double wm = dot(out.w.w, m);
            if (std::abs(wm) < w_norm / std::sqrt(static_cast<double>(kChannels))) continue;
            double max_abs = 0.0;
            for (double& x : m) {
                x /= wm;
                max_abs = std::max(max_abs, std::abs(x));
            }
            if (peak * max_abs > 0.5 * g0_min) continue;
            e.mixing = std::move(m);
            ok = true;
        }
        if (!ok) invalid("motion amplitude " + std::to_string(spec.amplitude) + " too large for the surrogate");
        events.push_back(std::move(e));
    }

    // R-peaks on the sampling grid, extended one beat past the end so every
    // sample has a phase.
    std::vector<std::int64_t> peaks{0};
    for (std::size_t b = 0; peaks.back() < sc.duration_ms; ++b)
        peaks.push_back(peaks.back() + sc.rr_ms[b % sc.rr_ms.size()]);

    std::vector<double> beat_gain(peaks.size(), 1.0);
    if (sc.beat_amplitude_jitter > 0.0) {
        std::normal_distribution<double> jitter(0.0, sc.beat_amplitude_jitter);
        for (double& b : beat_gain) b = std::clamp(1.0 + jitter(rng), 0.5, 1.5);
    }

    const std::size_t n = static_cast<std::size_t>(sc.duration_ms / kSamplePeriodMs);
    const double amp = sc.cardiac_amplitude;
    const double noise_sd = sc.noise_std * sc.cardiac_amplitude / w_norm;
    std::normal_distribution<double> noise(0.0, 1.0);

    out.t_ms.resize(n);
    out.cvs.resize(n);
    out.cvs_motion.resize(n);
    if (options.store_frames) {
        out.voltages.reserve(n);
        out.frames.reserve(n);
    }

    std::size_t beat = 0;
    GComponents comp;
    comp.air.resize(kChannels);
    comp.blood.resize(kChannels);
    comp.motion.resize(kChannels);
    comp.gdot.resize(kChannels);
    for (std::size_t s = 0; s < n; ++s) {
        const std::int64_t t = static_cast<std::int64_t>(s) * kSamplePeriodMs;
        while (peaks[beat + 1] <= t) ++beat;
        const double phase =
            static_cast<double>(t - peaks[beat]) / static_cast<double>(peaks[beat + 1] - peaks[beat]);
        const double shape = cardiogenic_template(phase, rise_fraction);
        const double cardiac = amp * beat_gain[beat] * shape;
        const double resp =
            resp_gain * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / sc.respiration_period_ms + resp_phase);

        std::fill(comp.motion.begin(), comp.motion.end(), 0.0);
        for (const auto& e : events) {
            const double sh = event_shape(e, t, shape);
            if (sh == 0.0) continue;
            const double scale = e.spec.amplitude * amp * sh;
            for (std::size_t m = 0; m < kChannels; ++m) comp.motion[m] += scale * e.mixing[m];
        }
        for (std::size_t m = 0; m < kChannels; ++m) {
            comp.air[m] = resp * p_air[m];
            comp.blood[m] = cardiac * p_blood[m] + noise_sd * noise(rng);
            comp.gdot[m] = comp.air[m] + comp.blood[m] + comp.motion[m];
        }

        VoltageFrame vf;
        vf.t_ms = t;
        vf.current_ma = 1.0;
        vf.values.resize(kChannels);
        for (std::size_t m = 0; m < kChannels; ++m) {
            const double re = vf.current_ma / (g0[m] + comp.gdot[m]);
            vf.values[m] = {re, imag_ratio[m] * re};
        }
        TransconductanceFrame tf = transconductance_from_voltages(vf);
        const ChannelVector gdot = time_difference(tf, out.reference);

        out.t_ms[s] = t;
        out.cvs[s] = extract_cvs(gdot, out.w);
        out.cvs_motion[s] = extract_cvs(comp.motion, out.w);
        if (options.store_frames) {
            tf.components = comp;
            out.voltages.push_back(std::move(vf));
            out.frames.push_back(std::move(tf));
        }
    }

    for (auto p : peaks)
        if (p < sc.duration_ms) out.r_peaks_ms.push_back(p);
    out.cycle_labels = label_cycles(out.t_ms, out.cvs_motion, out.r_peaks_ms, amp, sc.ambiguous_fraction,
                                    sc.motion_fraction, &out.cycle_motion_level);
    return out;
}

}  // namespace cvsqi::eit
