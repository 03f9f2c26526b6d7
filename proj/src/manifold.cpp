#include "cvsqi/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvsqi/errors.hpp"
#include "cvsqi/nn/adam.hpp"
#include "cvsqi/nn/ops.hpp"

namespace cvsqi::manifold {

using nn::Activation;
using nn::Network;

std::string_view to_string(Kind k) noexcept {
    switch (k) {
        case Kind::PCA: return "pca";
        case Kind::VAE: return "vae";
        case Kind::BetaVAE: return "bvae";
        case Kind::ConvVAE: return "cvae";
        case Kind::BetaConvVAE: return "bcvae";
    }
    return "?";
}

Kind kind_from(std::string_view name) {
    for (Kind k : kAllKinds)
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::ParseError, "unknown manifold kind '" + std::string(name) + "'");
}

bool is_vae(Kind k) noexcept { return k != Kind::PCA; }
bool is_convolutional(Kind k) noexcept { return k == Kind::ConvVAE || k == Kind::BetaConvVAE; }

double default_beta(Kind k) noexcept {
    switch (k) {
        case Kind::BetaVAE: return 3.0;
        case Kind::BetaConvVAE: return 0.5;
        case Kind::VAE:
        case Kind::ConvVAE: return 1.0;
        case Kind::PCA: break;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

SymmetricEigen symmetric_eigen(std::vector<double> a, std::size_t n) {
    if (a.size() != n * n) throw Error(ErrorCode::ShapeMismatch, "matrix is not " + std::to_string(n) + " square");
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    auto A = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };

    double total = 0.0;
    for (double x : a) total += x * x;
    const double tol = total * 1e-32;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
        if (off <= tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (apq == 0.0) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return A(i, i) > A(j, j); });
    SymmetricEigen out;
    for (std::size_t i : order) {
        out.values.push_back(A(i, i));
        std::vector<double> col(n);
        for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + i];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

PcaModel pca_fit(std::span<const std::vector<double>> samples, std::size_t k) {
    if (samples.size() < k || samples.empty())
        throw Error(ErrorCode::InsufficientSamples,
                    std::to_string(samples.size()) + " samples for " + std::to_string(k) + " components");
    const std::size_t dim = samples.front().size();
    if (k > dim) throw Error(ErrorCode::InsufficientSamples, "more components than dimensions");
    PcaModel m;
    m.mean.assign(dim, 0.0);
    for (const auto& s : samples) {
        if (s.size() != dim) throw Error(ErrorCode::ShapeMismatch, "samples differ in length");
        for (std::size_t i = 0; i < dim; ++i) m.mean[i] += s[i];
    }
    for (double& x : m.mean) x /= static_cast<double>(samples.size());

    std::vector<double> cov(dim * dim, 0.0), c(dim);
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < dim; ++i) c[i] = s[i] - m.mean[i];
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j) cov[i * dim + j] += c[i] * c[j];
    }
    const double denom = samples.size() > 1 ? static_cast<double>(samples.size() - 1) : 1.0;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) {
            cov[i * dim + j] /= denom;
            cov[j * dim + i] = cov[i * dim + j];
        }

    SymmetricEigen eig = symmetric_eigen(std::move(cov), dim);
    for (std::size_t i = 0; i < k; ++i) {
        m.components.push_back(std::move(eig.vectors[i]));
        m.explained_variance.push_back(eig.values[i]);
    }
    return m;
}

std::vector<double> pca_project(const PcaModel& m, std::span<const double> x) {
    if (m.components.empty()) throw Error(ErrorCode::NotFitted, "PCA model has no components");
    if (x.size() != m.mean.size())
        throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.size()) + " samples, model expects " +
                                                  std::to_string(m.mean.size()));
    std::vector<double> out = m.mean;
    for (const auto& v : m.components) {
        double coef = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) coef += (x[i] - m.mean[i]) * v[i];
        for (std::size_t i = 0; i < x.size(); ++i) out[i] += coef * v[i];
    }
    return out;
}

// ---------------------------------------------------------------------------

Network encoder_for(Kind k) {
    constexpr std::size_t L = prep::kTargetLength, Z = 2 * kLatentDim;
    if (is_convolutional(k)) {
        return Network({
            Network::conv(L, 1, 8, 3, 2, Activation::ReLU),    // 75x8
            Network::conv(75, 8, 16, 3, 2, Activation::ReLU),  // 38x16
            Network::conv(38, 16, 24, 3, 2, Activation::ReLU), // 19x24
            Network::conv(19, 24, 32, 3, 2, Activation::ReLU), // 10x32
            Network::flatten(10, 32),
            Network::linear(320, Z, Activation::None),
        });
    }
    return Network({
        Network::linear(L, 125, Activation::ReLU),
        Network::linear(125, 75, Activation::ReLU),
        Network::linear(75, 50, Activation::ReLU),
        Network::linear(50, Z, Activation::None),
    });
}

Network decoder_for(Kind k) {
    constexpr std::size_t L = prep::kTargetLength;
    if (is_convolutional(k)) {
        return Network({
            Network::linear(kLatentDim, 320, Activation::None),
            Network::reshape(320, 10, 32),
            Network::deconv(10, 32, 24, 19, Activation::ReLU),
            Network::deconv(19, 24, 16, 38, Activation::ReLU),
            Network::deconv(38, 16, 8, 75, Activation::ReLU),
            Network::deconv(75, 8, 8, L, Activation::ReLU),
            Network::conv(L, 8, 1, 1, 1, Activation::ReLU),
            Network::linear(L, L, Activation::None),
        });
    }
    return Network({
        Network::linear(kLatentDim, 50, Activation::ReLU),
        Network::linear(50, 75, Activation::ReLU),
        Network::linear(75, 125, Activation::ReLU),
        Network::linear(125, L, Activation::None),
    });
}

VaeModel vae_build(Kind k, double beta, std::uint64_t seed) {
    if (!is_vae(k)) throw Error(ErrorCode::ParseError, "pca is not a VAE kind");
    VaeModel m;
    m.kind = k;
    m.beta = beta;
    m.encoder = encoder_for(k);
    m.decoder = decoder_for(k);
    std::mt19937_64 rng(seed);
    m.encoder.init_params(m.params, "enc.", rng);
    m.decoder_offset = m.params.size();
    m.decoder.init_params(m.params, "dec.", rng);
    return m;
}

namespace {

void check_input(std::span<const double> x) {
    if (x.size() != prep::kTargetLength)
        throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.size()) + " samples, expected 150");
}

std::vector<double> copy(const nn::Tensor& t) { return t.data; }

}  // namespace

VaeOutput vae_forward(const VaeModel& m, std::span<const double> x, std::span<const double> noise) {
    check_input(x);
    if (!noise.empty() && noise.size() != kLatentDim)
        throw Error(ErrorCode::ShapeMismatch, "noise has " + std::to_string(noise.size()) + " entries, expected 10");
    nn::Graph g(false);
    const nn::Var in = g.input(nn::Tensor::column(x));
    const nn::Var h = m.encoder.forward(g, in, m.params, 0);
    const nn::Var mu = nn::ad::slice_rows(g, h, 0, kLatentDim);
    const nn::Var log_sigma = nn::ad::slice_rows(g, h, kLatentDim, kLatentDim);
    nn::Var z = mu;
    if (!noise.empty()) z = nn::ad::reparameterize(g, mu, log_sigma, nn::Tensor::column(noise));
    const nn::Var r = m.decoder.forward(g, z, m.params, m.decoder_offset);

    VaeOutput out;
    out.reconstruction = copy(g.value(r));
    out.mu = copy(g.value(mu));
    out.z = copy(g.value(z));
    for (double ls : g.value(log_sigma).data) out.sigma.push_back(std::exp(ls));
    return out;
}

VaeOutput vae_forward(const VaeModel& m, std::span<const double> x, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> noise(kLatentDim);
    for (double& e : noise) e = normal(rng);
    return vae_forward(m, x, noise);
}

double kl_term(std::span<const double> mu, std::span<const double> sigma) {
    if (mu.size() != sigma.size())
        throw Error(ErrorCode::ShapeMismatch, "mu and sigma differ in length");
    return nn::kl_value(nn::Tensor::column(mu), nn::Tensor::column(sigma));
}

namespace {

struct LossParts {
    nn::Var recon;
    nn::Var total;
};

LossParts loss_parts(nn::Graph& g, VaeModel& m, const nn::Tensor& x, const nn::Tensor& noise, double beta) {
    const nn::Var in = g.constant_ref(x);
    const nn::Var h = m.encoder.forward(g, in, m.params, 0);
    const nn::Var mu = nn::ad::slice_rows(g, h, 0, kLatentDim);
    const nn::Var log_sigma = nn::ad::slice_rows(g, h, kLatentDim, kLatentDim);
    const nn::Var z = nn::ad::reparameterize(g, mu, log_sigma, noise);
    const nn::Var r = m.decoder.forward(g, z, m.params, m.decoder_offset);
    const nn::Var rec = nn::ad::squared_error(g, r, x);
    const nn::Var kl = nn::ad::kl_standard_normal(g, mu, log_sigma);
    return {rec, nn::ad::add_scaled(g, rec, kl, beta)};
}

}  // namespace

nn::Var vae_loss_graph(nn::Graph& g, VaeModel& m, const nn::Tensor& x, const nn::Tensor& noise, double beta) {
    return loss_parts(g, m, x, noise, beta).total;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

double mean_recon(const VaeModel& m, std::span<const prep::NormalizedCycle> set) {
    double s = 0.0;
    for (const auto& c : set) s += squared_distance(c.values, vae_forward(m, c.values).reconstruction);
    return s / static_cast<double>(set.size());
}

void require_positive_only(std::span<const prep::NormalizedCycle> set, const char* which) {
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].label != QualityClass::Normal)
            throw Error(ErrorCode::ContainsNegativeSamples,
                        std::string(which) + " cycle " + std::to_string(i) + " (" + set[i].subject_id + " @ " +
                            std::to_string(set[i].t_start_ms) + " ms) is labelled " +
                            std::string(to_string(set[i].label)));
}

}  // namespace

VaeTrainReport vae_train(VaeModel& m, std::span<const prep::NormalizedCycle> train_set,
                         std::span<const prep::NormalizedCycle> val_set, const VaeTrainConfig& cfg) {
    require_positive_only(train_set, "training");
    require_positive_only(val_set, "validation");
    if (train_set.empty()) throw Error(ErrorCode::EmptySplit, "training set is empty");
    if (val_set.empty()) throw Error(ErrorCode::EmptySplit, "validation set is empty");
    if (cfg.batch == 0) throw Error(ErrorCode::ShapeMismatch, "batch size must be positive");

    std::vector<nn::Tensor> inputs;
    inputs.reserve(train_set.size());
    for (const auto& c : train_set) {
        check_input(c.values);
        inputs.push_back(nn::Tensor::column(c.values));
    }

    VaeTrainReport rep;
    rep.initial_recon = mean_recon(m, train_set);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    nn::Tensor noise(kLatentDim, 1);

    std::vector<nn::Tensor> best;
    for (const auto& p : m.params) best.push_back(p.value);
    double best_val = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0, rec_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            m.params.zero_grad();
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = order[k];
                for (double& e : noise.data) e = normal(rng);
                nn::Graph g;
                const LossParts loss = loss_parts(g, m, inputs[i], noise, m.beta);
                loss_sum += g.value(loss.total)[0];
                rec_sum += g.value(loss.recon)[0];
                g.backward(loss.total, scale);
                if (train_set[i].label == QualityClass::Normal) ++rep.audit.positive_samples;
                else ++rep.audit.negative_samples;
            }
            nn::adam_step(m.params, cfg.lr);
        }
        const double n = static_cast<double>(order.size());
        rep.train_loss.push_back(loss_sum / n);
        rep.train_recon.push_back(rec_sum / n);
        const double vr = mean_recon(m, val_set);
        rep.val_recon.push_back(vr);
        if (vr < best_val) {
            best_val = vr;
            rep.best_epoch = epoch;
            for (std::size_t i = 0; i < m.params.size(); ++i) best[i] = m.params[i].value;
        }
    }
    for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i].value = best[i];
    return rep;
}

// ---------------------------------------------------------------------------

ManifoldModel from_pca(PcaModel p) {
    ManifoldModel m;
    m.kind = Kind::PCA;
    m.pca = std::move(p);
    return m;
}

ManifoldModel from_vae(VaeModel v) {
    ManifoldModel m;
    m.kind = v.kind;
    m.beta = v.beta;
    m.vae = std::move(v);
    return m;
}

std::vector<double> reconstruct(const ManifoldModel& m, std::span<const double> x) {
    if (m.pca) return pca_project(*m.pca, x);
    if (m.vae) return vae_forward(*m.vae, x).reconstruction;
    throw Error(ErrorCode::NotFitted, "manifold model has neither PCA components nor VAE parameters");
}

double residual(const ManifoldModel& m, std::span<const double> x) {
    return std::sqrt(squared_distance(x, reconstruct(m, x)));
}

std::vector<double> residuals(const ManifoldModel& m, std::span<const prep::NormalizedCycle> cycles) {
    std::vector<double> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) out.push_back(residual(m, c.values));
    return out;
}

ThresholdChoice select_threshold(std::span<const double> residuals, std::span<const int> labels) {
    if (residuals.size() != labels.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(residuals.size()) + " residuals vs " +
                                                   std::to_string(labels.size()) + " labels");
    const auto n_pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw Error(ErrorCode::SingleClassDataset, "threshold selection needs both classes");

    std::vector<std::size_t> order(residuals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return residuals[a] < residuals[b]; });

    auto youden = [&](std::size_t tp, std::size_t fp) {
        const double sens = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double spec = static_cast<double>(n_neg - fp) / static_cast<double>(n_neg);
        return sens + spec - 1.0;
    };

    // d = -inf: everything rejected.
    ThresholdChoice best{-std::numeric_limits<double>::infinity(), youden(0, 0)};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double r = residuals[order[i]];
        for (; i < order.size() && residuals[order[i]] == r; ++i) (labels[order[i]] != 0 ? tp : fp)++;
        double d = std::numeric_limits<double>::infinity();
        if (i < order.size()) {
            const double next = residuals[order[i]];
            d = r + (next - r) / 2.0;
            if (!(d < next)) d = r;
        }
        const double j = youden(tp, fp);
        if (j > best.j) best = {d, j};
    }
    return best;
}

int assess(const ManifoldModel& m, std::span<const double> x) {
    if (!m.threshold) throw Error(ErrorCode::ThresholdUnset, "manifold model has no threshold");
    return assess_residual(residual(m, x), *m.threshold);
}

}  // namespace cvsqi::manifold
