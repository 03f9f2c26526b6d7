#include "cvsqi/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cvsqi/errors.hpp"

namespace cvsqi::io {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
        out << contents;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

namespace {

struct CsvReader {
    std::istringstream in;
    std::string origin;
    std::size_t line_no = 0;

    CsvReader(const fs::path& path) : in(read_file(path)), origin(path.string()) {}

    /// Next data row split on commas; skips blank and '#' lines.
    bool next(std::vector<std::string>& fields, std::string* comment = nullptr) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line[0] == '#') {
                if (comment) *comment = line.substr(1);
                continue;
            }
            fields.clear();
            std::size_t start = 0;
            for (;;) {
                const std::size_t comma = line.find(',', start);
                fields.push_back(line.substr(start, comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) + ": " + what);
    }

    double number(const std::string& s) const {
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) fail("'" + s + "' is not a number");
        return v;
    }

    std::int64_t integer(const std::string& s) const {
        char* end = nullptr;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size()) fail("'" + s + "' is not an integer");
        return v;
    }

    QualityClass label(const std::string& s) const {
        try {
            return quality_from_code(static_cast<int>(integer(s)));
        } catch (const Error&) {
            fail("bad label code '" + s + "'");
        }
    }

    void expect_header(const std::vector<std::string>& fields, const char* first) {
        if (fields.empty() || fields[0] != first) fail(std::string("expected header starting with '") + first + "'");
    }
};

void append_values(std::string& out, std::span<const double> xs) {
    for (double x : xs) {
        out += ',';
        out += format_double(x);
    }
}

}  // namespace

void write_raw_cycles(const fs::path& path, const std::vector<prep::CvsCycle>& cycles) {
    std::string out = "subject_id,t_start_ms,label_code,v,samples\n";
    for (const auto& c : cycles) {
        out += c.subject_id + ',' + std::to_string(c.t_start_ms) + ',' + std::to_string(label_code(c.label)) + ',' +
               std::to_string(c.samples.size());
        append_values(out, c.samples);
        out += '\n';
    }
    write_atomic(path, out);
}

std::vector<prep::CvsCycle> read_raw_cycles(const fs::path& path) {
    CsvReader r(path);
    std::vector<std::string> f;
    if (!r.next(f)) r.fail("empty file");
    r.expect_header(f, "subject_id");
    std::vector<prep::CvsCycle> out;
    while (r.next(f)) {
        if (f.size() < 4) r.fail("too few fields");
        prep::CvsCycle c;
        c.subject_id = f[0];
        c.t_start_ms = r.integer(f[1]);
        c.label = r.label(f[2]);
        const auto v = static_cast<std::size_t>(r.integer(f[3]));
        if (f.size() != 4 + v) r.fail("row declares " + std::to_string(v) + " samples but has " + std::to_string(f.size() - 4));
        for (std::size_t i = 0; i < v; ++i) c.samples.push_back(r.number(f[4 + i]));
        out.push_back(std::move(c));
    }
    return out;
}

void write_normalized(const fs::path& path, const std::vector<prep::NormalizedCycle>& cycles) {
    std::string out = "subject_id,t_start_ms,label_code,source_length,scheme";
    for (std::size_t i = 0; i < prep::kTargetLength; ++i) out += ",x" + std::to_string(i);
    out += '\n';
    for (const auto& c : cycles) {
        if (c.values.size() != prep::kTargetLength)
            throw Error(ErrorCode::ShapeMismatch, "normalized cycle has " + std::to_string(c.values.size()) + " values");
        out += c.subject_id + ',' + std::to_string(c.t_start_ms) + ',' + std::to_string(label_code(c.label)) + ',' +
               std::to_string(c.source_length) + ',' + std::string(prep::to_string(c.scheme));
        append_values(out, c.values);
        out += '\n';
    }
    write_atomic(path, out);
}

std::vector<prep::NormalizedCycle> read_normalized(const fs::path& path) {
    CsvReader r(path);
    std::vector<std::string> f;
    if (!r.next(f)) r.fail("empty file");
    r.expect_header(f, "subject_id");
    std::vector<prep::NormalizedCycle> out;
    while (r.next(f)) {
        if (f.size() != 5 + prep::kTargetLength) r.fail("expected 155 fields, got " + std::to_string(f.size()));
        prep::NormalizedCycle c;
        c.subject_id = f[0];
        c.t_start_ms = r.integer(f[1]);
        c.label = r.label(f[2]);
        c.source_length = static_cast<std::size_t>(r.integer(f[3]));
        c.scheme = prep::size_scheme_from(f[4]);
        c.values.reserve(prep::kTargetLength);
        for (std::size_t i = 0; i < prep::kTargetLength; ++i) c.values.push_back(r.number(f[5 + i]));
        out.push_back(std::move(c));
    }
    return out;
}

void write_calibration(const fs::path& path, const std::vector<prep::CalibrationWindow>& windows) {
    std::string out = "subject_id,n,samples\n";
    for (const auto& w : windows) {
        out += w.subject_id + ',' + std::to_string(w.samples.size());
        append_values(out, w.samples);
        out += '\n';
    }
    write_atomic(path, out);
}

std::vector<prep::CalibrationWindow> read_calibration(const fs::path& path) {
    CsvReader r(path);
    std::vector<std::string> f;
    if (!r.next(f)) r.fail("empty file");
    r.expect_header(f, "subject_id");
    std::vector<prep::CalibrationWindow> out;
    while (r.next(f)) {
        if (f.size() < 2) r.fail("too few fields");
        prep::CalibrationWindow w;
        w.subject_id = f[0];
        const auto n = static_cast<std::size_t>(r.integer(f[1]));
        if (f.size() != 2 + n) r.fail("row declares " + std::to_string(n) + " samples");
        for (std::size_t i = 0; i < n; ++i) w.samples.push_back(r.number(f[2 + i]));
        out.push_back(std::move(w));
    }
    return out;
}

void write_stream(const fs::path& path, const CvsStream& s) {
    if (s.t_ms.size() != s.x.size() || (!s.g.empty() && s.g.size() != s.x.size()))
        throw Error(ErrorCode::LengthMismatch, "stream columns differ in length");
    std::string out = "# subject " + s.subject_id + "\n";
    out += "t_ms,x,r_peak,label_code";
    if (!s.g.empty())
        for (std::size_t m = 0; m < s.g.front().size(); ++m) out += ",g" + std::to_string(m);
    out += '\n';
    std::size_t k = 0;
    for (std::size_t i = 0; i < s.t_ms.size(); ++i) {
        while (k < s.r_peaks_ms.size() && s.r_peaks_ms[k] < s.t_ms[i]) ++k;
        const bool peak = k < s.r_peaks_ms.size() && s.r_peaks_ms[k] == s.t_ms[i];
        out += std::to_string(s.t_ms[i]) + ',' + format_double(s.x[i]) + ',' + (peak ? "1" : "0") + ',';
        if (peak && k < s.cycle_labels.size() && s.cycle_labels[k]) out += std::to_string(label_code(*s.cycle_labels[k]));
        if (!s.g.empty()) append_values(out, s.g[i]);
        out += '\n';
    }
    write_atomic(path, out);
}

CvsStream read_stream(const fs::path& path) {
    CsvReader r(path);
    std::vector<std::string> f;
    std::string comment;
    if (!r.next(f, &comment)) r.fail("empty file");
    r.expect_header(f, "t_ms");
    CvsStream s;
    if (comment.rfind(" subject ", 0) == 0) s.subject_id = comment.substr(9);
    const std::size_t width = f.size();
    const bool with_g = width > 4;
    while (r.next(f)) {
        if (f.size() != width) r.fail("expected " + std::to_string(width) + " fields");
        s.t_ms.push_back(r.integer(f[0]));
        s.x.push_back(r.number(f[1]));
        if (f[2] == "1") {
            s.r_peaks_ms.push_back(s.t_ms.back());
            s.cycle_labels.push_back(f[3].empty() ? std::nullopt : std::optional<QualityClass>(r.label(f[3])));
        } else if (f[2] != "0") {
            r.fail("r_peak must be 0 or 1");
        }
        if (with_g) {
            std::vector<double> g;
            for (std::size_t m = 4; m < width; ++m) g.push_back(r.number(f[m]));
            s.g.push_back(std::move(g));
        }
    }
    if (!s.cycle_labels.empty()) s.cycle_labels.pop_back();  // the last peak starts no cycle
    return s;
}

// ---------------------------------------------------------------------------

std::string ModelArtifact::name() const {
    if (const auto* d = std::get_if<disc::DiscriminativeModel>(&model)) return std::string(disc::to_string(d->architecture));
    return std::string(manifold::to_string(std::get<manifold::ManifoldModel>(model).kind));
}

double score(const ModelArtifact& a, std::span<const double> x) {
    if (const auto* d = std::get_if<disc::DiscriminativeModel>(&a.model)) return disc::forward(*d, x);
    return -manifold::residual(std::get<manifold::ManifoldModel>(a.model), x);
}

int verdict_from_score(const ModelArtifact& a, double s) {
    if (const auto* d = std::get_if<disc::DiscriminativeModel>(&a.model)) return disc::verdict(*d, s);
    const auto& m = std::get<manifold::ManifoldModel>(a.model);
    if (!m.threshold) throw Error(ErrorCode::ThresholdUnset, "manifold model '" + a.name() + "' has no threshold");
    return manifold::assess_residual(-s, *m.threshold);
}

namespace {

constexpr const char* kFormatTag = "cvsqi-model";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

json encode_threshold(std::optional<double> d) {
    if (!d) return nullptr;
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    return *d;
}

std::optional<double> decode_threshold(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw Error(ErrorCode::CorruptFile, "bad threshold '" + s + "'");
    }
    return j.get<double>();
}

json encode_params(const nn::ParamSet& ps) {
    json arr = json::array();
    for (const auto& p : ps)
        arr.push_back({{"name", p.name}, {"rows", p.value.rows}, {"cols", p.value.cols}, {"data", p.value.data}});
    return arr;
}

void decode_params(const json& arr, nn::ParamSet& into) {
    if (!arr.is_array() || arr.size() != into.size())
        throw Error(ErrorCode::CorruptFile, "parameter list does not match the architecture");
    for (std::size_t i = 0; i < into.size(); ++i) {
        const json& e = arr[i];
        nn::Param& p = into[i];
        if (e.at("name").get<std::string>() != p.name || e.at("rows").get<std::size_t>() != p.value.rows ||
            e.at("cols").get<std::size_t>() != p.value.cols)
            throw Error(ErrorCode::CorruptFile, "parameter " + std::to_string(i) + " does not match " + p.name + " " +
                                                    p.value.shape_string());
        auto data = e.at("data").get<std::vector<double>>();
        if (data.size() != p.value.size()) throw Error(ErrorCode::CorruptFile, "parameter " + p.name + " is truncated");
        p.value.data = std::move(data);
    }
}

json payload(const ModelArtifact& a) {
    json j;
    j["format"] = kFormatTag;
    j["format_version"] = kModelFormatVersion;
    j["preprocessing"] = {{"scheme", prep::to_string(a.scheme)}, {"scale", prep::to_string(a.scale)}};
    j["training"] = {{"seed", a.training.seed}, {"epochs", a.training.epochs}, {"lr", a.training.lr},
                     {"extra", a.training.extra}};
    if (const auto* d = std::get_if<disc::DiscriminativeModel>(&a.model)) {
        j["family"] = "discriminative";
        j["architecture"] = disc::to_string(d->architecture);
        j["decision_threshold"] = d->decision_threshold;
        j["params"] = encode_params(d->params);
    } else {
        const auto& m = std::get<manifold::ManifoldModel>(a.model);
        j["family"] = "manifold";
        j["architecture"] = manifold::to_string(m.kind);
        j["beta"] = m.beta;
        j["threshold"] = encode_threshold(m.threshold);
        if (m.pca)
            j["pca"] = {{"mean", m.pca->mean},
                        {"components", m.pca->components},
                        {"explained_variance", m.pca->explained_variance}};
        if (m.vae) j["params"] = encode_params(m.vae->params);
    }
    return j;
}

}  // namespace

std::string model_to_text(const ModelArtifact& a) {
    json j = payload(a);
    j["checksum"] = hex(fnv1a(j.dump()));
    return j.dump(1) + "\n";
}

ModelArtifact model_from_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, origin + ": not a readable model file (" + e.what() + ")");
    }
    try {
        if (!j.is_object() || j.value("format", "") != kFormatTag)
            throw Error(ErrorCode::CorruptFile, origin + ": not a model file");
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw Error(ErrorCode::VersionMismatch, origin + ": file format version " + std::to_string(version) +
                                                        ", this build reads version " +
                                                        std::to_string(kModelFormatVersion));
        const std::string stored = j.at("checksum").get<std::string>();
        json body = j;
        body.erase("checksum");
        if (hex(fnv1a(body.dump())) != stored) throw Error(ErrorCode::CorruptFile, origin + ": checksum mismatch");

        ModelArtifact a;
        a.scheme = prep::size_scheme_from(j.at("preprocessing").at("scheme").get<std::string>());
        a.scale = prep::scale_mode_from(j.at("preprocessing").at("scale").get<std::string>());
        const json& t = j.at("training");
        a.training.seed = t.at("seed").get<std::uint64_t>();
        a.training.epochs = t.at("epochs").get<std::size_t>();
        a.training.lr = t.at("lr").get<double>();
        a.training.extra = t.at("extra").get<std::map<std::string, double>>();

        const std::string family = j.at("family").get<std::string>();
        const std::string arch = j.at("architecture").get<std::string>();
        if (family == "discriminative") {
            disc::DiscriminativeModel d = disc::build(disc::architecture_from(arch), 0);
            d.decision_threshold = j.at("decision_threshold").get<double>();
            decode_params(j.at("params"), d.params);
            a.model = std::move(d);
        } else if (family == "manifold") {
            const manifold::Kind kind = manifold::kind_from(arch);
            manifold::ManifoldModel m;
            if (kind == manifold::Kind::PCA) {
                manifold::PcaModel p;
                const json& pj = j.at("pca");
                p.mean = pj.at("mean").get<std::vector<double>>();
                p.components = pj.at("components").get<std::vector<std::vector<double>>>();
                p.explained_variance = pj.at("explained_variance").get<std::vector<double>>();
                for (const auto& c : p.components)
                    if (c.size() != p.mean.size()) throw Error(ErrorCode::CorruptFile, origin + ": ragged PCA components");
                m = manifold::from_pca(std::move(p));
            } else {
                manifold::VaeModel v = manifold::vae_build(kind, j.at("beta").get<double>(), 0);
                decode_params(j.at("params"), v.params);
                m = manifold::from_vae(std::move(v));
            }
            m.beta = j.at("beta").get<double>();
            m.threshold = decode_threshold(j.at("threshold"));
            a.model = std::move(m);
        } else {
            throw Error(ErrorCode::CorruptFile, origin + ": unknown model family '" + family + "'");
        }
        return a;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, origin + ": " + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::CorruptFile, origin + ": " + e.what());
        throw;
    }
}

void save_model(const fs::path& path, const ModelArtifact& a) { write_atomic(path, model_to_text(a)); }

ModelArtifact load_model(const fs::path& path) { return model_from_text(read_file(path), path.string()); }

}  // namespace cvsqi::io
