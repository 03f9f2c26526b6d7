#include "cvsqi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cvsqi/errors.hpp"

namespace cvsqi::pipeline {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::int64_t round10(double ms) { return static_cast<std::int64_t>(std::llround(ms / 10.0)) * 10; }

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
    }
}

template <typename T>
void take(const json& j, const char* key, T& into) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

DatasetRecipe recipe_from_json(const std::string& text) {
    const json j = parse_json(text, "recipe");
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "recipe must be a JSON object");
    DatasetRecipe r;
    take(j, "seed", r.seed);
    take(j, "subjects", r.subjects);
    take(j, "min_cycles", r.min_cycles);
    take(j, "max_cycles", r.max_cycles);
    take(j, "ambiguous_rate", r.ambiguous_rate);
    take(j, "motion_rate", r.motion_rate);
    take(j, "ambiguous_amp_min", r.ambiguous_amp_min);
    take(j, "ambiguous_amp_max", r.ambiguous_amp_max);
    take(j, "motion_amp_min", r.motion_amp_min);
    take(j, "motion_amp_max", r.motion_amp_max);
    take(j, "cardiac_amp_min", r.cardiac_amp_min);
    take(j, "cardiac_amp_max", r.cardiac_amp_max);
    take(j, "noise_std", r.noise_std);
    take(j, "instrument_noise", r.instrument_noise);
    take(j, "beat_amplitude_jitter", r.beat_amplitude_jitter);
    take(j, "gain_share", r.gain_share);
    take(j, "rr_min_ms", r.rr_min_ms);
    take(j, "rr_max_ms", r.rr_max_ms);
    take(j, "rr_jitter_ms", r.rr_jitter_ms);
    return r;
}

std::string recipe_to_json(const DatasetRecipe& r) {
    const json j = {{"seed", r.seed},
                    {"subjects", r.subjects},
                    {"min_cycles", r.min_cycles},
                    {"max_cycles", r.max_cycles},
                    {"ambiguous_rate", r.ambiguous_rate},
                    {"motion_rate", r.motion_rate},
                    {"ambiguous_amp_min", r.ambiguous_amp_min},
                    {"ambiguous_amp_max", r.ambiguous_amp_max},
                    {"motion_amp_min", r.motion_amp_min},
                    {"motion_amp_max", r.motion_amp_max},
                    {"cardiac_amp_min", r.cardiac_amp_min},
                    {"cardiac_amp_max", r.cardiac_amp_max},
                    {"noise_std", r.noise_std},
                    {"instrument_noise", r.instrument_noise},
                    {"beat_amplitude_jitter", r.beat_amplitude_jitter},
                    {"gain_share", r.gain_share},
                    {"rr_min_ms", r.rr_min_ms},
                    {"rr_max_ms", r.rr_max_ms},
                    {"rr_jitter_ms", r.rr_jitter_ms}};
    return j.dump(2) + "\n";
}

eit::SynthScenario subject_scenario(const DatasetRecipe& r, std::size_t index) {
    if (r.subjects == 0 || r.min_cycles == 0 || r.max_cycles < r.min_cycles)
        throw Error(ErrorCode::InvalidScenario, "recipe needs subjects > 0 and 0 < min_cycles <= max_cycles");
    if (!(r.cardiac_amp_min > 0.0) || r.cardiac_amp_max < r.cardiac_amp_min)
        throw Error(ErrorCode::InvalidScenario, "cardiac amplitude range must be positive and ordered");
    if (r.ambiguous_rate < 0 || r.motion_rate < 0 || r.ambiguous_rate + r.motion_rate > 1.0)
        throw Error(ErrorCode::InvalidScenario, "class rates must be nonnegative and sum to at most 1");
    if (!(r.noise_std >= 0.0) || !(r.instrument_noise >= 0.0))
        throw Error(ErrorCode::InvalidScenario, "noise levels must be nonnegative");

    std::mt19937_64 rng(splitmix64(r.seed * 0x100000001b3ull + index));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    eit::SynthScenario sc;
    char id[16];
    std::snprintf(id, sizeof id, "S%03zu", index);
    sc.subject_id = id;
    sc.subject_seed = rng();
    sc.beat_amplitude_jitter = r.beat_amplitude_jitter;
    sc.cardiac_amplitude = std::exp(uniform(std::log(r.cardiac_amp_min), std::log(r.cardiac_amp_max)));
    sc.noise_std = std::hypot(r.noise_std, r.instrument_noise / sc.cardiac_amplitude);
    const double mean_rr = uniform(static_cast<double>(r.rr_min_ms), static_cast<double>(r.rr_max_ms));
    const std::size_t n_scored =
        r.min_cycles + static_cast<std::size_t>(u01(rng) * static_cast<double>(r.max_cycles - r.min_cycles + 1)) %
                           (r.max_cycles - r.min_cycles + 1);

    // Beats until n_scored cycles start at or after the calibration window.
    std::vector<std::int64_t> peaks{0};
    std::size_t after = 0;
    while (after < n_scored + 1) {
        const double jitter = uniform(-static_cast<double>(r.rr_jitter_ms), static_cast<double>(r.rr_jitter_ms));
        const std::int64_t rr = std::clamp<std::int64_t>(round10(mean_rr + jitter), 300, 1490);
        sc.rr_ms.push_back(rr);
        peaks.push_back(peaks.back() + rr);
        if (peaks.back() >= kCalibrationMs) ++after;
    }
    sc.duration_ms = peaks.back() + eit::kSamplePeriodMs;

    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
        if (peaks[k] < kCalibrationMs) continue;
        const double u = u01(rng);
        double amp = 0.0;
        if (u < r.motion_rate) amp = uniform(r.motion_amp_min, r.motion_amp_max);
        else if (u < r.motion_rate + r.ambiguous_rate) amp = uniform(r.ambiguous_amp_min, r.ambiguous_amp_max);
        const double rr = static_cast<double>(peaks[k + 1] - peaks[k]);
        eit::MotionEvent e;
        e.amplitude = amp;
        if (u01(rng) < r.gain_share) {
            e.shape = eit::MotionShape::Gain;
            e.start_ms = peaks[k];
            e.duration_ms = peaks[k + 1] - peaks[k];
        } else {
            e.shape = static_cast<eit::MotionShape>(std::min(3, static_cast<int>(u01(rng) * 4.0)));
            e.start_ms = peaks[k] + round10(uniform(0.1, 0.5) * rr);
            e.duration_ms = std::max<std::int64_t>(30, round10(uniform(0.2, 0.45) * rr));
        }
        e.duration_ms = std::min(e.duration_ms, peaks[k + 1] - e.start_ms);
        if (amp > 0.0) sc.motion_events.push_back(e);
    }
    return sc;
}

prep::CalibrationWindow calibration_window(std::string_view subject_id, std::span<const double> x) {
    if (x.size() < prep::kCalibrationSamples)
        throw Error(ErrorCode::MissingCalibration, "stream of '" + std::string(subject_id) + "' has " +
                                                       std::to_string(x.size()) + " samples, 2000 needed");
    return {std::string(subject_id), std::vector<double>(x.begin(), x.begin() + prep::kCalibrationSamples)};
}

std::vector<prep::CvsCycle> scored_cycles(const eit::SynthStream& s) {
    auto cycles = prep::segment_cycles(s.t_ms, s.cvs, s.r_peaks_ms, s.subject_id);
    std::vector<prep::CvsCycle> out;
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        if (cycles[i].t_start_ms < kCalibrationMs) continue;
        cycles[i].label = s.cycle_labels[i];
        out.push_back(std::move(cycles[i]));
    }
    return out;
}

Dataset generate_dataset(const DatasetRecipe& r) {
    if (r.subjects == 0) throw Error(ErrorCode::InvalidScenario, "recipe has no subjects");
    Dataset d;
    for (std::size_t i = 0; i < r.subjects; ++i) {
        const eit::SynthStream s = eit::synthesize_stream(subject_scenario(r, i), {false});
        d.calibration.push_back(calibration_window(s.subject_id, s.cvs));
        auto cycles = scored_cycles(s);
        d.cycles.insert(d.cycles.end(), std::make_move_iterator(cycles.begin()), std::make_move_iterator(cycles.end()));
    }
    return d;
}

namespace {

template <typename Cycle>
ClassCounts count_classes(std::span<const Cycle> cycles) {
    ClassCounts c;
    for (const auto& x : cycles) {
        switch (x.label) {
            case QualityClass::Normal: ++c.normal; break;
            case QualityClass::Ambiguous: ++c.ambiguous; break;
            case QualityClass::MotionInfluenced: ++c.motion; break;
        }
    }
    return c;
}

}  // namespace

ClassCounts class_counts(std::span<const prep::CvsCycle> cycles) { return count_classes(cycles); }
ClassCounts class_counts(std::span<const prep::NormalizedCycle> cycles) { return count_classes(cycles); }

std::string format_class_counts(const ClassCounts& c) {
    const double n = std::max<double>(1.0, static_cast<double>(c.total()));
    char buf[200];
    std::snprintf(buf, sizeof buf, "cycles %zu: normal %zu (%.2f%%), ambiguous %zu (%.2f%%), motion %zu (%.2f%%)",
                  c.total(), c.normal, 100.0 * c.normal / n, c.ambiguous, 100.0 * c.ambiguous / n, c.motion,
                  100.0 * c.motion / n);
    return buf;
}

std::string cmd_gen(const DatasetRecipe& r, const fs::path& out_dir) {
    const Dataset d = generate_dataset(r);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir.string() + "'");
    io::write_raw_cycles(out_dir / "cycles.csv", d.cycles);
    io::write_calibration(out_dir / "calibration.csv", d.calibration);
    return format_class_counts(class_counts(d.cycles));
}

io::CvsStream to_stream(const eit::SynthStream& s, bool with_g) {
    io::CvsStream out;
    out.subject_id = s.subject_id;
    out.t_ms = s.t_ms;
    out.x = s.cvs;
    out.r_peaks_ms = s.r_peaks_ms;
    for (auto l : s.cycle_labels) out.cycle_labels.emplace_back(l);
    if (with_g)
        for (const auto& f : s.frames) out.g.push_back(f.g);
    return out;
}

std::vector<prep::NormalizedCycle> normalize_dataset(std::span<const prep::CvsCycle> cycles,
                                                     std::span<const prep::CalibrationWindow> calibration,
                                                     prep::ScaleMode mode, prep::SizeScheme scheme) {
    std::map<std::string, double> scale;
    if (mode == prep::ScaleMode::Subject)
        for (const auto& w : calibration) scale[w.subject_id] = prep::subject_scale_factor(w);
    std::vector<prep::NormalizedCycle> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) {
        std::optional<double> s;
        if (mode == prep::ScaleMode::Subject) {
            const auto it = scale.find(c.subject_id);
            if (it == scale.end())
                throw Error(ErrorCode::MissingCalibration, "no calibration window for subject '" + c.subject_id + "'");
            s = it->second;
        }
        out.push_back(prep::normalize_cycle(c, mode, s, scheme));
    }
    return out;
}

SplitSets apply_split(std::span<const prep::NormalizedCycle> cycles, const eval::SubjectSplit& split) {
    SplitSets out;
    auto in = [](const std::vector<std::string>& v, const std::string& s) {
        return std::binary_search(v.begin(), v.end(), s);
    };
    for (const auto& c : cycles) {
        if (in(split.train, c.subject_id)) out.train.push_back(c);
        else if (in(split.val, c.subject_id)) out.val.push_back(c);
        else if (in(split.test, c.subject_id)) out.test.push_back(c);
    }
    return out;
}

SplitSets split_dataset(std::span<const prep::NormalizedCycle> cycles, std::uint64_t seed,
                        std::array<double, 3> fractions) {
    std::vector<std::string> subjects;
    subjects.reserve(cycles.size());
    for (const auto& c : cycles) subjects.push_back(c.subject_id);
    return apply_split(cycles, eval::split_by_subject(subjects, fractions, seed));
}

std::vector<prep::NormalizedCycle> positives(std::span<const prep::NormalizedCycle> cycles) {
    std::vector<prep::NormalizedCycle> out;
    for (const auto& c : cycles)
        if (c.label == QualityClass::Normal) out.push_back(c);
    return out;
}

void require_scheme(std::span<const prep::NormalizedCycle> cycles, prep::SizeScheme scheme, std::string_view what) {
    for (const auto& c : cycles)
        if (c.scheme != scheme)
            throw Error(ErrorCode::SchemeMismatch, std::string(what) + " cycle " + c.subject_id + " @ " +
                                                       std::to_string(c.t_start_ms) + " ms uses '" +
                                                       std::string(prep::to_string(c.scheme)) + "', expected '" +
                                                       std::string(prep::to_string(scheme)) + "'");
}

// ---------------------------------------------------------------------------

PipelineConfig config_from_json(const std::string& text) {
    const json j = parse_json(text, "config");
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
    PipelineConfig c;
    std::string s;
    if (j.contains("scheme")) {
        take(j, "scheme", s);
        c.scheme = prep::size_scheme_from(s);
    }
    if (j.contains("scale")) {
        take(j, "scale", s);
        c.scale = prep::scale_mode_from(s);
    }
    take(j, "split_seed", c.split_seed);
    if (j.contains("discriminative")) {
        const json& d = j["discriminative"];
        take(d, "epochs", c.discriminative.epochs);
        take(d, "lr", c.discriminative.lr);
        take(d, "batch", c.discriminative.batch);
        take(d, "seed", c.discriminative.seed);
    }
    if (j.contains("vae")) {
        const json& v = j["vae"];
        take(v, "epochs", c.vae.epochs);
        take(v, "lr", c.vae.lr);
        take(v, "batch", c.vae.batch);
        take(v, "seed", c.vae.seed);
    }
    return c;
}

PipelineConfig load_config(const std::optional<fs::path>& path) {
    if (path) return config_from_json(io::read_file(*path));
    if (const char* env = std::getenv(kConfigEnv); env && *env) return config_from_json(io::read_file(env));
    return {};
}

io::ModelArtifact train_discriminative(disc::Architecture arch, std::span<const prep::NormalizedCycle> train_set,
                                       std::span<const prep::NormalizedCycle> val_set, const disc::TrainConfig& cfg,
                                       prep::SizeScheme scheme, prep::ScaleMode scale, disc::TrainReport* report) {
    require_scheme(train_set, scheme, "training");
    require_scheme(val_set, scheme, "validation");
    disc::DiscriminativeModel m = disc::build(arch, cfg.seed);
    const disc::TrainReport rep = disc::train(m, train_set, val_set, cfg);
    if (report) *report = rep;
    io::ModelArtifact a;
    a.model = std::move(m);
    a.scheme = scheme;
    a.scale = scale;
    a.training = {cfg.seed, cfg.epochs, cfg.lr, {{"batch", static_cast<double>(cfg.batch)},
                                                  {"best_epoch", static_cast<double>(rep.best_epoch)},
                                                  {"zeta_pos", rep.weights.pos},
                                                  {"zeta_neg", rep.weights.neg}}};
    return a;
}

io::ModelArtifact train_manifold(manifold::Kind kind, double beta, std::span<const prep::NormalizedCycle> pos_train,
                                 std::span<const prep::NormalizedCycle> pos_val,
                                 const manifold::VaeTrainConfig& cfg, prep::SizeScheme scheme,
                                 prep::ScaleMode scale, manifold::VaeTrainReport* report) {
    require_scheme(pos_train, scheme, "training");
    require_scheme(pos_val, scheme, "validation");
    io::ModelArtifact a;
    a.scheme = scheme;
    a.scale = scale;
    if (kind == manifold::Kind::PCA) {
        for (const auto& c : pos_train)
            if (c.label != QualityClass::Normal)
                throw Error(ErrorCode::ContainsNegativeSamples, "PCA training cycle " + c.subject_id + " @ " +
                                                                    std::to_string(c.t_start_ms) + " ms");
        std::vector<std::vector<double>> xs;
        for (const auto& c : pos_train) xs.push_back(c.values);
        a.model = manifold::from_pca(manifold::pca_fit(xs));
        a.training = {cfg.seed, 0, 0.0, {{"samples", static_cast<double>(xs.size())}}};
        return a;
    }
    manifold::VaeModel v = manifold::vae_build(kind, beta, cfg.seed);
    const manifold::VaeTrainReport rep = manifold::vae_train(v, pos_train, pos_val, cfg);
    if (report) *report = rep;
    a.model = manifold::from_vae(std::move(v));
    a.training = {cfg.seed, cfg.epochs, cfg.lr, {{"batch", static_cast<double>(cfg.batch)},
                                                  {"best_epoch", static_cast<double>(rep.best_epoch)},
                                                  {"positive_samples", static_cast<double>(rep.audit.positive_samples)},
                                                  {"negative_samples", static_cast<double>(rep.audit.negative_samples)}}};
    return a;
}

manifold::ThresholdChoice calibrate_threshold(io::ModelArtifact& a, std::span<const prep::NormalizedCycle> scored) {
    auto* m = std::get_if<manifold::ManifoldModel>(&a.model);
    if (!m) throw Error(ErrorCode::NotFitted, "thresholds apply to manifold models only");
    require_scheme(scored, a.scheme, "threshold");
    const std::vector<double> r = manifold::residuals(*m, scored);
    std::vector<int> labels;
    for (const auto& c : scored) labels.push_back(eval_value(c.label));
    const manifold::ThresholdChoice choice = manifold::select_threshold(r, labels);
    m->threshold = choice.d;
    return choice;
}

std::vector<double> scores(const io::ModelArtifact& a, std::span<const prep::NormalizedCycle> cycles) {
    std::vector<double> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) out.push_back(io::score(a, c.values));
    return out;
}

EvaluationRecord evaluate(const io::ModelArtifact& a, std::span<const prep::NormalizedCycle> test) {
    require_scheme(test, a.scheme, "evaluation");
    EvaluationRecord rec;
    rec.model = a.name();
    rec.samples = test.size();
    const std::vector<double> s = scores(a, test);
    std::vector<int> labels, preds;
    for (std::size_t i = 0; i < test.size(); ++i) {
        labels.push_back(eval_value(test[i].label));
        preds.push_back(io::verdict_from_score(a, s[i]));
    }
    rec.counts = eval::confusion(preds, labels);
    rec.metrics = eval::metrics(rec.counts);
    const bool both = rec.counts.tp + rec.counts.fn > 0 && rec.counts.tn + rec.counts.fp > 0;
    if (both) rec.auc = eval::roc_auc(s, labels).auc;
    return rec;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_report(std::span<const EvaluationRecord> records) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %6s %9s %8s %8s %12s %12s %8s\n", "model", "n", "accuracy", "ppv", "npv",
                  "sensitivity", "specificity", "auc");
    out += line;
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%-8s %6zu %9s %8s %8s %12s %12s %8s\n", r.model.c_str(), r.samples,
                      cell(r.metrics.accuracy).c_str(), cell(r.metrics.ppv).c_str(), cell(r.metrics.npv).c_str(),
                      cell(r.metrics.sensitivity).c_str(), cell(r.metrics.specificity).c_str(), cell(r.auc).c_str());
        out += line;
    }
    return out;
}

std::string report_json(std::span<const EvaluationRecord> records) {
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back({{"model", r.model},
                       {"samples", r.samples},
                       {"tp", r.counts.tp},
                       {"tn", r.counts.tn},
                       {"fp", r.counts.fp},
                       {"fn", r.counts.fn},
                       {"accuracy", optional_json(r.metrics.accuracy)},
                       {"ppv", optional_json(r.metrics.ppv)},
                       {"npv", optional_json(r.metrics.npv)},
                       {"sensitivity", optional_json(r.metrics.sensitivity)},
                       {"specificity", optional_json(r.metrics.specificity)},
                       {"auc", optional_json(r.auc)}});
    return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::vector<AssessInput> assessment_inputs(const io::ModelArtifact& a, const io::CvsStream& s) {
    const prep::CalibrationWindow cal = calibration_window(s.subject_id, s.x);
    std::optional<double> scale;
    if (a.scale == prep::ScaleMode::Subject) scale = prep::subject_scale_factor(cal);

    const auto cycles = prep::segment_cycles(s.t_ms, s.x, s.r_peaks_ms, s.subject_id);
    std::vector<AssessInput> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) {
        AssessInput in;
        in.t_start_ms = c.t_start_ms;
        if (c.samples.size() <= prep::kTargetLength) in.cycle = prep::normalize_cycle(c, a.scale, scale, a.scheme);
        out.push_back(std::move(in));
    }
    return out;
}

std::vector<VerdictLine> cmd_assess(const io::ModelArtifact& a, const io::CvsStream& s,
                                    std::optional<prep::SizeScheme> expected) {
    if (expected && *expected != a.scheme)
        throw Error(ErrorCode::SchemeMismatch, "model '" + a.name() + "' was trained with '" +
                                                   std::string(prep::to_string(a.scheme)) + "', requested '" +
                                                   std::string(prep::to_string(*expected)) + "'");
    std::vector<VerdictLine> out;
    for (const auto& in : assessment_inputs(a, s)) {
        VerdictLine v;
        v.t_start_ms = in.t_start_ms;
        if (!in.cycle) {
            // Too long for the model input; flagged rather than dropped so the
            // verdict stream stays aligned with the R-peaks.
            v.verdict = 0;
            v.score = std::numeric_limits<double>::quiet_NaN();
        } else {
            v.score = io::score(a, in.cycle->values);
            v.verdict = io::verdict_from_score(a, v.score);
        }
        out.push_back(v);
    }
    return out;
}

std::string format_verdicts(std::span<const VerdictLine> lines) {
    std::string out = "t_start_ms,verdict,score\n";
    for (const auto& l : lines)
        out += std::to_string(l.t_start_ms) + ',' + std::to_string(l.verdict) + ',' + io::format_double(l.score) + '\n';
    return out;
}

LatencyReport cmd_bench(const io::ModelArtifact& a, std::size_t n_cycles, std::uint64_t seed) {
    n_cycles = std::max<std::size_t>(n_cycles, 1000);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(60, prep::kTargetLength);
    std::uniform_real_distribution<double> amp(0.5, 2.0);
    std::normal_distribution<double> noise(0.0, 0.02);

    std::vector<prep::CvsCycle> cycles(n_cycles);
    for (auto& c : cycles) {
        const std::size_t v = len(rng);
        const double A = amp(rng);
        c.subject_id = "bench";
        for (std::size_t i = 0; i < v; ++i)
            c.samples.push_back(A * eit::cardiogenic_template(static_cast<double>(i) / static_cast<double>(v - 1), 0.3) +
                                noise(rng));
    }
    const std::optional<double> scale = a.scale == prep::ScaleMode::Subject ? std::optional<double>(1.5) : std::nullopt;

    int sink = 0;
    auto run = [&](const prep::CvsCycle& c) {
        const prep::NormalizedCycle n = prep::normalize_cycle(c, a.scale, scale, a.scheme);
        const double s = io::score(a, n.values);
        sink += a.is_manifold() && !std::get<manifold::ManifoldModel>(a.model).threshold
                    ? (s <= 0.0)
                    : io::verdict_from_score(a, s);
    };
    for (std::size_t i = 0; i < std::min<std::size_t>(100, n_cycles); ++i) run(cycles[i]);

    std::vector<double> us;
    us.reserve(n_cycles);
    for (const auto& c : cycles) {
        const auto t0 = std::chrono::steady_clock::now();
        run(c);
        const auto t1 = std::chrono::steady_clock::now();
        us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    volatile int keep = sink;
    (void)keep;

    LatencyReport r;
    r.model = a.name();
    r.samples = us.size();
    double sum = 0.0;
    for (double x : us) sum += x;
    r.mean_us = sum / static_cast<double>(us.size());
    std::sort(us.begin(), us.end());
    const std::size_t n = us.size();
    r.median_us = n % 2 ? us[n / 2] : 0.5 * (us[n / 2 - 1] + us[n / 2]);
    r.p99_us = us[std::min(n - 1, static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n))) - 1)];
    return r;
}

std::string format_latency(std::span<const LatencyReport> reports) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %8s %12s %12s %12s\n", "model", "n", "mean_us", "median_us", "p99_us");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-8s %8zu %12.3f %12.3f %12.3f\n", r.model.c_str(), r.samples, r.mean_us,
                      r.median_us, r.p99_us);
        out += line;
    }
    return out;
}

}  // namespace cvsqi::pipeline
