#pragma once
// Text file formats (CSV datasets, calibration windows, CVS streams) and the
// versioned JSON model file. Every writer goes through a temp file + rename.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvsqi/discriminative.hpp"
#include "cvsqi/manifold.hpp"
#include "cvsqi/preprocessing.hpp"

namespace cvsqi::io {

namespace fs = std::filesystem;

/// Shortest text that parses back to the same double ("%.17g").
std::string format_double(double v);

void write_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// subject_id,t_start_ms,label_code,v,x_0..x_{v-1} (rows vary in width).
void write_raw_cycles(const fs::path& path, const std::vector<prep::CvsCycle>& cycles);
std::vector<prep::CvsCycle> read_raw_cycles(const fs::path& path);

/// subject_id,t_start_ms,label_code,source_length,scheme,x_0..x_149.
void write_normalized(const fs::path& path, const std::vector<prep::NormalizedCycle>& cycles);
std::vector<prep::NormalizedCycle> read_normalized(const fs::path& path);

/// subject_id,n,x_0..x_{n-1}.
void write_calibration(const fs::path& path, const std::vector<prep::CalibrationWindow>& windows);
std::vector<prep::CalibrationWindow> read_calibration(const fs::path& path);

struct CvsStream {
    std::string subject_id;
    std::vector<std::int64_t> t_ms;
    std::vector<double> x;
    std::vector<std::int64_t> r_peaks_ms;
    /// Label of the cycle starting at each R-peak except the last, when known.
    std::vector<std::optional<QualityClass>> cycle_labels;
    /// Optional 208-channel transconductance per sample.
    std::vector<std::vector<double>> g;
};

/// t_ms,x,r_peak,label_code[,g_0..g_207]. label_code is filled on R-peak rows
/// that start a labelled cycle. The subject id goes in a leading comment.
void write_stream(const fs::path& path, const CvsStream& s);
CvsStream read_stream(const fs::path& path);

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double lr = 0.0;
    std::map<std::string, double> extra;
};

struct ModelArtifact {
    std::variant<disc::DiscriminativeModel, manifold::ManifoldModel> model;
    prep::SizeScheme scheme = prep::SizeScheme::Interp;
    prep::ScaleMode scale = prep::ScaleMode::Subject;
    TrainingMeta training;

    bool is_manifold() const noexcept { return model.index() == 1; }
    /// "lr".."vgg5" or "pca".."bcvae".
    std::string name() const;
};

/// Higher means more likely normal: p for discriminative models, -r for
/// manifold models.
double score(const ModelArtifact& a, std::span<const double> x);
/// Throws ThresholdUnset for a manifold model without a threshold.
int verdict_from_score(const ModelArtifact& a, double score);

void save_model(const fs::path& path, const ModelArtifact& a);
/// Throws VersionMismatch (naming both versions), CorruptFile (unparseable,
/// incomplete or checksum mismatch) and IoError.
ModelArtifact load_model(const fs::path& path);

std::string model_to_text(const ModelArtifact& a);
ModelArtifact model_from_text(const std::string& text, const std::string& origin = "<memory>");

}  // namespace cvsqi::io
