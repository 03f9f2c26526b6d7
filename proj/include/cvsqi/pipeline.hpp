#pragma once
// End-to-end workflows behind the command-line tool: synthetic dataset
// generation, dataset preparation and splitting, training wrappers,
// threshold calibration, evaluation reports, stream assessment and latency
// benchmarking.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvsqi/discriminative.hpp"
#include "cvsqi/eit_forward.hpp"
#include "cvsqi/evaluation.hpp"
#include "cvsqi/io.hpp"
#include "cvsqi/manifold.hpp"
#include "cvsqi/preprocessing.hpp"

namespace cvsqi::pipeline {

namespace fs = std::filesystem;

/// Cycles that start inside the calibration window are never scored.
inline constexpr std::int64_t kCalibrationMs =
    static_cast<std::int64_t>(prep::kCalibrationSamples) * prep::kSamplePeriodMs;

struct DatasetRecipe {
    std::uint64_t seed = 1;
    std::size_t subjects = 30;
    std::size_t min_cycles = 60;  // scored cycles per subject
    std::size_t max_cycles = 100;
    double ambiguous_rate = 0.10;
    double motion_rate = 0.10;
    /// Relative event amplitudes drawn per labelled cycle.
    double ambiguous_amp_min = 0.6;
    double ambiguous_amp_max = 1.4;
    double motion_amp_min = 1.8;
    double motion_amp_max = 4.0;
    /// Cardiogenic peak, log-uniform across subjects.
    double cardiac_amp_min = 0.1;
    double cardiac_amp_max = 10.0;
    /// Noise relative to the cardiogenic peak, plus an absolute sensor floor
    /// in raw CVS units; the two add in quadrature.
    double noise_std = 0.0;
    double instrument_noise = 0.02;
    double beat_amplitude_jitter = 0.1;
    /// Share of events that rescale the whole beat (shape preserved); the rest
    /// are step, ramp, burst or bump artifacts inside the cycle.
    double gain_share = 0.5;
    /// Per-subject mean RR, uniform; beats jitter by up to rr_jitter_ms.
    std::int64_t rr_min_ms = 600;
    std::int64_t rr_max_ms = 1100;
    std::int64_t rr_jitter_ms = 40;
};

/// Missing keys keep their defaults. Throws ParseError / IoError.
DatasetRecipe recipe_from_json(const std::string& text);
std::string recipe_to_json(const DatasetRecipe& r);

/// Scenario for subject `index`: RR sequence, amplitude and one short motion
/// event inside each cycle chosen to be ambiguous or motion-influenced.
eit::SynthScenario subject_scenario(const DatasetRecipe& r, std::size_t index);

struct Dataset {
    std::vector<prep::CvsCycle> cycles;  // scored cycles only
    std::vector<prep::CalibrationWindow> calibration;
};

/// First 20 s of a stream. Throws MissingCalibration when shorter.
prep::CalibrationWindow calibration_window(std::string_view subject_id, std::span<const double> x);

/// Scored cycles of one synthetic stream (start >= 20 s) with their labels.
std::vector<prep::CvsCycle> scored_cycles(const eit::SynthStream& s);

Dataset generate_dataset(const DatasetRecipe& r);

struct ClassCounts {
    std::size_t normal = 0;
    std::size_t ambiguous = 0;
    std::size_t motion = 0;
    std::size_t total() const noexcept { return normal + ambiguous + motion; }
};

ClassCounts class_counts(std::span<const prep::CvsCycle> cycles);
ClassCounts class_counts(std::span<const prep::NormalizedCycle> cycles);
std::string format_class_counts(const ClassCounts& c);

/// Writes cycles.csv and calibration.csv under out_dir and returns the class
/// distribution line.
std::string cmd_gen(const DatasetRecipe& r, const fs::path& out_dir);

io::CvsStream to_stream(const eit::SynthStream& s, bool with_g = false);

/// Normalizes every cycle with the subject's calibration scale (Subject
/// mode), per-cycle max (Naive) or not at all (None). Throws
/// MissingCalibration when a subject has no window.
std::vector<prep::NormalizedCycle> normalize_dataset(std::span<const prep::CvsCycle> cycles,
                                                     std::span<const prep::CalibrationWindow> calibration,
                                                     prep::ScaleMode mode, prep::SizeScheme scheme);

struct SplitSets {
    std::vector<prep::NormalizedCycle> train;
    std::vector<prep::NormalizedCycle> val;
    std::vector<prep::NormalizedCycle> test;
};

SplitSets apply_split(std::span<const prep::NormalizedCycle> cycles, const eval::SubjectSplit& split);
SplitSets split_dataset(std::span<const prep::NormalizedCycle> cycles, std::uint64_t seed,
                        std::array<double, 3> fractions = {0.8, 0.1, 0.1});
std::vector<prep::NormalizedCycle> positives(std::span<const prep::NormalizedCycle> cycles);

/// Throws SchemeMismatch naming the first offending cycle.
void require_scheme(std::span<const prep::NormalizedCycle> cycles, prep::SizeScheme scheme, std::string_view what);

// ---------------------------------------------------------------------------

struct PipelineConfig {
    prep::SizeScheme scheme = prep::SizeScheme::Interp;
    prep::ScaleMode scale = prep::ScaleMode::Subject;
    disc::TrainConfig discriminative{20, 1e-3, 64, 0};
    manifold::VaeTrainConfig vae{30, 1e-3, 64, 0};
    std::uint64_t split_seed = 0;
};

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "CVSQI_CONFIG";

PipelineConfig config_from_json(const std::string& text);
/// Explicit path, else $CVSQI_CONFIG, else defaults.
PipelineConfig load_config(const std::optional<fs::path>& path);

io::ModelArtifact train_discriminative(disc::Architecture arch, std::span<const prep::NormalizedCycle> train_set,
                                       std::span<const prep::NormalizedCycle> val_set, const disc::TrainConfig& cfg,
                                       prep::SizeScheme scheme, prep::ScaleMode scale,
                                       disc::TrainReport* report = nullptr);

/// PCA ignores cfg apart from bookkeeping. Only normal cycles are accepted.
io::ModelArtifact train_manifold(manifold::Kind kind, double beta, std::span<const prep::NormalizedCycle> pos_train,
                                 std::span<const prep::NormalizedCycle> pos_val,
                                 const manifold::VaeTrainConfig& cfg, prep::SizeScheme scheme,
                                 prep::ScaleMode scale, manifold::VaeTrainReport* report = nullptr);

/// Youden threshold from residuals of `scored` (train + val, all classes),
/// stored in the artifact.
manifold::ThresholdChoice calibrate_threshold(io::ModelArtifact& a, std::span<const prep::NormalizedCycle> scored);

std::vector<double> scores(const io::ModelArtifact& a, std::span<const prep::NormalizedCycle> cycles);

struct EvaluationRecord {
    std::string model;
    std::size_t samples = 0;
    eval::ConfusionCounts counts;
    eval::Metrics metrics;
    std::optional<double> auc;
};

EvaluationRecord evaluate(const io::ModelArtifact& a, std::span<const prep::NormalizedCycle> test);
std::string format_report(std::span<const EvaluationRecord> records);
std::string report_json(std::span<const EvaluationRecord> records);

// ---------------------------------------------------------------------------

struct VerdictLine {
    std::int64_t t_start_ms = 0;
    int verdict = 0;
    double score = 0.0;  // NaN for cycles too long to normalize
};

struct AssessInput {
    std::int64_t t_start_ms = 0;
    std::optional<prep::NormalizedCycle> cycle;  // empty when longer than the model input
};

/// Model inputs for every R-peak interval of a stream, exactly as the
/// assessment path builds them.
std::vector<AssessInput> assessment_inputs(const io::ModelArtifact& a, const io::CvsStream& s);

/// One verdict per R-peak interval, in stream order, using the model's own
/// preprocessing and the first 20 s as calibration. `expected` guards against
/// running a model under a different size scheme (SchemeMismatch).
std::vector<VerdictLine> cmd_assess(const io::ModelArtifact& a, const io::CvsStream& s,
                                    std::optional<prep::SizeScheme> expected = std::nullopt);
std::string format_verdicts(std::span<const VerdictLine> lines);

struct LatencyReport {
    std::string model;
    double mean_us = 0.0;
    double median_us = 0.0;
    double p99_us = 0.0;
    std::size_t samples = 0;
};

/// Wall-clock per-cycle normalize + score + verdict over n_cycles synthetic
/// cycles (at least 1000) after a warm-up pass.
LatencyReport cmd_bench(const io::ModelArtifact& a, std::size_t n_cycles = 1000, std::uint64_t seed = 0);
std::string format_latency(std::span<const LatencyReport> reports);

}  // namespace cvsqi::pipeline
