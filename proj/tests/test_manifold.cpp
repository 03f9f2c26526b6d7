#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <doctest.h>

#include "cvsqi/errors.hpp"
#include "cvsqi/evaluation.hpp"
#include "cvsqi/manifold.hpp"
#include "cvsqi/nn/ops.hpp"
#include "support/models.hpp"

using namespace cvsqi;
using namespace cvsqi::manifold;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::IoError;
}

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::vector<std::vector<double>> rows(n);
    for (auto& r : rows) r = oracle::random_vector(d, rng);
    return rows;
}

std::vector<std::vector<double>> values_of(std::span<const prep::NormalizedCycle> cycles) {
    std::vector<std::vector<double>> out;
    for (const auto& c : cycles) out.push_back(c.values);
    return out;
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::vector<prep::NormalizedCycle> normals_only(std::size_t n, std::uint64_t seed) {
    return oracle::toy_cycles(n, 0, seed);
}

}  // namespace

// ---------------------------------------------------------------------------
// eigen / PCA
// ---------------------------------------------------------------------------

TEST_CASE("symmetric_eigen: diagonal and 2x2 closed forms") {
    const auto d = symmetric_eigen({3, 0, 0, 0, 1, 0, 0, 0, 2}, 3);
    CHECK(d.values == std::vector<double>{3, 2, 1});
    const auto e = symmetric_eigen({2, 1, 1, 2}, 2);
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(std::abs(e.vectors[0][0]) - std::sqrt(0.5)) < 1e-14);
}

TEST_CASE("pca: variance along one axis gives that axis as the first component") {
    std::mt19937_64 rng(1);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> x(150, 0.3);
        x[3] += oracle::random_vector(1, rng, -2, 2)[0];
        rows.push_back(x);
    }
    const auto m = pca_fit(rows);
    CHECK(m.components.size() == kLatentDim);
    CHECK(std::abs(std::abs(m.components[0][3]) - 1.0) < 1e-12);
}

TEST_CASE("pca: too few samples and unfitted models are reported") {
    std::mt19937_64 rng(2);
    const auto rows = random_rows(9, 150, rng);
    CHECK(code_of([&] { pca_fit(rows); }) == ErrorCode::InsufficientSamples);
    CHECK(code_of([&] { pca_project(PcaModel{}, rows[0]); }) == ErrorCode::NotFitted);
    CHECK(code_of([&] { reconstruct(ManifoldModel{}, rows[0]); }) == ErrorCode::NotFitted);
}

TEST_CASE("property: PCA projector matches a dense eigendecomposition on 30x150 data") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        std::mt19937_64 rng(seed);
        const auto rows = random_rows(30, 150, rng);
        const auto m = pca_fit(rows);
        const auto P = oracle::projector_from(m.components), Q = oracle::eigen_projector(rows, kLatentDim);
        double worst = 0.0;
        for (std::size_t i = 0; i < P.size(); ++i) worst = std::max(worst, std::abs(P[i] - Q[i]));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("property: principal vectors are orthonormal and variances descend") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        const auto m = pca_fit(random_rows(60, 150, rng));
        for (std::size_t i = 0; i < m.components.size(); ++i)
            for (std::size_t j = 0; j < m.components.size(); ++j) {
                const double d = std::inner_product(m.components[i].begin(), m.components[i].end(),
                                                    m.components[j].begin(), 0.0);
                CHECK(std::abs(d - (i == j ? 1.0 : 0.0)) < 1e-10);
            }
        CHECK(std::is_sorted(m.explained_variance.rbegin(), m.explained_variance.rend()));
    }
}

TEST_CASE("pca: isotropic data has nearly equal explained variances") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<std::vector<double>> rows(10000, std::vector<double>(150));
    for (auto& r : rows)
        for (auto& v : r) v = n01(rng);
    const auto m = pca_fit(rows);
    CHECK(m.explained_variance.front() / m.explained_variance.back() < 1.5);
}

TEST_CASE("property: projection is exact on the subspace, zero off it, and idempotent") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        const auto m = pca_fit(random_rows(40, 150, rng));
        // On the subspace + mean.
        std::vector<double> x = m.mean;
        const auto coef = oracle::random_vector(kLatentDim, rng, -3, 3);
        for (std::size_t i = 0; i < kLatentDim; ++i)
            for (std::size_t j = 0; j < 150; ++j) x[j] += coef[i] * m.components[i][j];
        CHECK(dist(pca_project(m, x), x) < 1e-10);
        CHECK(residual(from_pca(m), x) < 1e-8);

        // Orthogonal to the span with a zero mean.
        PcaModel centred = m;
        std::fill(centred.mean.begin(), centred.mean.end(), 0.0);
        std::vector<double> y = oracle::random_vector(150, rng);
        for (const auto& v : m.components) {
            const double c = std::inner_product(y.begin(), y.end(), v.begin(), 0.0);
            for (std::size_t j = 0; j < 150; ++j) y[j] -= c * v[j];
        }
        const auto zero = pca_project(centred, y);
        CHECK(*std::max_element(zero.begin(), zero.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) ==
              doctest::Approx(0.0).epsilon(1e-10));

        const auto z = oracle::random_vector(150, rng);
        const auto once = pca_project(m, z), twice = pca_project(m, once);
        CHECK(dist(once, twice) < 1e-10);
    }
}

TEST_CASE("property: PCA reconstruction error does not increase with k") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        const auto rows = random_rows(50, 150, rng);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k <= 10; ++k) {
            const auto m = pca_fit(rows, k);
            double err = 0.0;
            for (const auto& r : rows) err += std::pow(dist(pca_project(m, r), r), 2);
            CHECK(err <= prev * (1.0 + 1e-12));
            prev = err;
        }
    }
}

// ---------------------------------------------------------------------------
// VAE
// ---------------------------------------------------------------------------

TEST_CASE("architecture audit: VAE encoder and decoder traces equal the reference tables") {
    for (Kind k : {Kind::VAE, Kind::BetaVAE, Kind::ConvVAE, Kind::BetaConvVAE}) {
        CAPTURE(to_string(k));
        CHECK(encoder_for(k).trace() == oracle::expected_encoder_trace(k));
        CHECK(decoder_for(k).trace() == oracle::expected_decoder_trace(k));
        CHECK(encoder_for(k).output_shape().size() == 2 * kLatentDim);
        CHECK(decoder_for(k).input_shape().size() == kLatentDim);
    }
}

TEST_CASE("kind names, defaults and latent size") {
    for (Kind k : kAllKinds) CHECK(kind_from(to_string(k)) == k);
    CHECK(code_of([] { kind_from("cae"); }) == ErrorCode::ParseError);
    CHECK(default_beta(Kind::VAE) == 1.0);
    CHECK(default_beta(Kind::ConvVAE) == 1.0);
    CHECK(default_beta(Kind::BetaConvVAE) == 0.5);
    CHECK(kLatentDim == 10);
}

TEST_CASE("vae_forward: inference is deterministic and z equals mu") {
    const auto m = vae_build(Kind::ConvVAE, 1.0, 3);
    std::mt19937_64 rng(3);
    const auto x = oracle::normal_beat(rng);
    const auto a = vae_forward(m, x), b = vae_forward(m, x);
    CHECK(a.reconstruction == b.reconstruction);
    CHECK(a.z == a.mu);
    CHECK(a.mu.size() == kLatentDim);
    for (double s : a.sigma) CHECK(s > 0.0);
    CHECK(code_of([&] { vae_forward(m, std::vector<double>(100, 0.0)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("vae_forward: sigma -> 0 collapses the sample onto mu") {
    auto m = vae_build(Kind::VAE, 1.0, 4);
    // Final encoder layer: rows 10..19 produce log sigma.
    auto& W = m.params[m.decoder_offset - 2].value;
    auto& b = m.params[m.decoder_offset - 1].value;
    for (std::size_t r = kLatentDim; r < 2 * kLatentDim; ++r) {
        for (std::size_t c = 0; c < W.cols; ++c) W(r, c) = 0.0;
        b[r] = -60.0;
    }
    std::mt19937_64 rng(4);
    const auto x = oracle::normal_beat(rng);
    const auto noisy = vae_forward(m, x, rng);
    for (std::size_t i = 0; i < kLatentDim; ++i) CHECK(noisy.z[i] == doctest::Approx(noisy.mu[i]).epsilon(1e-20));
    CHECK(dist(noisy.reconstruction, vae_forward(m, x).reconstruction) < 1e-20);
}

TEST_CASE("kl_term: closed forms and domain") {
    std::vector<double> mu(10, 0.0), sigma(10, 1.0);
    CHECK(kl_term(mu, sigma) == 0.0);
    mu[0] = 1.0;
    CHECK(kl_term(mu, sigma) == doctest::Approx(0.5).epsilon(1e-15));
    sigma[3] = 0.0;
    CHECK(code_of([&] { kl_term(mu, sigma); }) == ErrorCode::NonPositiveSigma);
}

TEST_CASE("property: KL is nonnegative and its graph form matches the closed form with exact gradients") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        bool nonneg = true;
        for (int i = 0; i < 10000 / 3 + 1; ++i) {
            std::vector<double> mu(10), sigma(10);
            for (std::size_t j = 0; j < 10; ++j) {
                mu[j] = u(rng);
                sigma[j] = std::exp(u(rng));
            }
            nonneg = nonneg && kl_term(mu, sigma) >= 0.0;
        }
        CHECK(nonneg);

        const auto x0 = oracle::random_vector(20, rng, -1, 1);
        const auto r = oracle::check_input_gradient(x0, [](const std::vector<double>& x, std::vector<double>* grad) {
            nn::Graph g;
            const auto in = g.input(nn::Tensor(20, 1, x));
            const auto kl = nn::ad::kl_standard_normal(g, nn::ad::slice_rows(g, in, 0, 10), nn::ad::slice_rows(g, in, 10, 10));
            if (grad) {
                g.backward(kl);
                *grad = g.grad(in).data;
            }
            return g.value(kl)[0];
        });
        CHECK_MESSAGE(r.max_rel_error < 1e-6, r.worst);
        std::vector<double> mu(x0.begin(), x0.begin() + 10), sigma(10);
        for (std::size_t j = 0; j < 10; ++j) sigma[j] = std::exp(x0[10 + j]);
        nn::Graph g;
        const auto in = g.input(nn::Tensor(20, 1, x0));
        const auto kl = nn::ad::kl_standard_normal(g, nn::ad::slice_rows(g, in, 0, 10), nn::ad::slice_rows(g, in, 10, 10));
        CHECK(g.value(kl)[0] == doctest::Approx(kl_term(mu, sigma)).epsilon(1e-13));
    }
}

TEST_CASE("property: VAE and ConvVAE losses pass reparameterised finite-difference checks") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        for (Kind k : {Kind::VAE, Kind::BetaVAE, Kind::ConvVAE, Kind::BetaConvVAE}) {
            CAPTURE(to_string(k));
            const auto r = oracle::vae_gradients(k, seed);
            CHECK(r.checked >= 20);
            CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
        }
    }
}

TEST_CASE("vae_train: reconstruction halves, runs are deterministic, lr 0 freezes parameters") {
    const auto tr = normals_only(200, 11), va = normals_only(40, 12);
    for (Kind k : {Kind::VAE, Kind::ConvVAE}) {
        CAPTURE(to_string(k));
        auto m = vae_build(k, 1.0, 1);
        const auto rep = vae_train(m, tr, va, {25, 3e-3, 32, 1});
        CHECK(rep.val_recon.size() == 25);
        CHECK(rep.val_recon[rep.best_epoch - 1] < 0.5 * rep.initial_recon);
        CHECK(rep.train_recon.back() < 0.5 * rep.initial_recon);
        CHECK(rep.audit.positive_samples == 25 * tr.size());
        CHECK(rep.audit.negative_samples == 0);

        auto again = vae_build(k, 1.0, 1);
        const auto rep2 = vae_train(again, tr, va, {25, 3e-3, 32, 1});
        CHECK(rep2.train_loss == rep.train_loss);
    }
    auto frozen = vae_build(Kind::BetaVAE, 3.0, 2);
    const auto init = vae_build(Kind::BetaVAE, 3.0, 2);
    vae_train(frozen, tr, va, {2, 0.0, 32, 0});
    for (std::size_t i = 0; i < init.params.size(); ++i) CHECK(frozen.params[i].value.data == init.params[i].value.data);
}

TEST_CASE("vae_train: negatives and empty sets are refused") {
    const auto mixed = oracle::toy_cycles(20, 1, 3), pos = normals_only(20, 4);
    auto m = vae_build(Kind::VAE, 1.0, 0);
    CHECK(code_of([&] { vae_train(m, mixed, pos, {}); }) == ErrorCode::ContainsNegativeSamples);
    CHECK(code_of([&] { vae_train(m, pos, mixed, {}); }) == ErrorCode::ContainsNegativeSamples);
    CHECK(code_of([&] { vae_train(m, {}, pos, {}); }) == ErrorCode::EmptySplit);
    CHECK(code_of([&] { vae_train(m, pos, {}, {}); }) == ErrorCode::EmptySplit);
}

TEST_CASE("vae_train: beta sweep is runnable and reports AUC per beta") {
    const auto tr = normals_only(150, 21), va = normals_only(30, 22);
    const auto test = oracle::toy_cycles(60, 30, 23);
    std::vector<int> labels;
    for (const auto& c : test) labels.push_back(eval_value(c.label));
    for (double beta : {1.0 / 3.0, 0.5, 1.0, 2.0, 3.0}) {
        auto m = vae_build(Kind::BetaVAE, beta, 5);
        vae_train(m, tr, va, {8, 3e-3, 32, 5});
        const auto model = from_vae(std::move(m));
        std::vector<double> scores;
        for (double r : residuals(model, test)) scores.push_back(-r);
        const double auc = eval::roc_auc(scores, labels).auc;
        MESSAGE("beta " << beta << " test AUC " << auc);
        CHECK(auc > 0.5);
    }
}

// ---------------------------------------------------------------------------
// residuals, thresholds, verdicts
// ---------------------------------------------------------------------------

TEST_CASE("property: residual is a pure function, nonnegative, and separates toy classes") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        const auto normals = normals_only(120, seed);
        const auto model = from_pca(pca_fit(values_of(normals)));
        const auto test = oracle::toy_cycles(50, 50, seed + 10);
        auto r = residuals(model, test);
        std::vector<double> rn, rm;
        for (std::size_t i = 0; i < test.size(); ++i) {
            CHECK(r[i] >= 0.0);
            (test[i].label == QualityClass::Normal ? rn : rm).push_back(r[i]);
        }
        CHECK(median(rn) < median(rm));
        // Reversed order, one at a time.
        for (std::size_t i = test.size(); i-- > 0;) CHECK(residual(model, test[i].values) == r[i]);
    }
}

TEST_CASE("select_threshold: separated residuals and constant residuals") {
    const std::vector<double> r = {0.1, 0.2, 0.9};
    const std::vector<int> y = {1, 1, 0};
    const auto c = select_threshold(r, y);
    CHECK(c.j == 1.0);
    CHECK(c.d == doctest::Approx(0.55).epsilon(1e-15));

    const std::vector<double> flat(6, 0.4);
    const std::vector<int> ly = {1, 0, 1, 0, 1, 1};
    CHECK(select_threshold(flat, ly).j == 0.0);

    CHECK(code_of([&] { select_threshold(r, std::vector<int>{1, 1, 1}); }) == ErrorCode::SingleClassDataset);
    CHECK(code_of([&] { select_threshold(r, std::vector<int>{1, 0}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("property: Youden threshold matches a 1e5-point grid sweep") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        std::mt19937_64 rng(seed);
        for (int rep = 0; rep < 5; ++rep) {
            const std::size_t n = 20 + rng() % 180;
            std::vector<double> r(n);
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng() % 4 != 0);
                // Shifted classes with some exact ties.
                r[i] = std::round((y[i] ? 1.0 : 1.6) * 20.0 * oracle::random_vector(1, rng, 0, 1)[0]) / 20.0;
            }
            const auto c = select_threshold(r, y);
            CHECK(std::abs(c.j - oracle::youden_grid_best(r, y, 100000)) < 1e-12);
            CHECK(std::abs(c.j - oracle::youden_at(r, y, c.d)) < 1e-12);
        }
    }
}

TEST_CASE("property: Youden ties prefer the smaller threshold") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        std::vector<double> r;
        std::vector<int> y;
        for (int i = 0; i < 40; ++i) {
            r.push_back(static_cast<double>(rng() % 8));
            y.push_back(static_cast<int>(rng() % 2));
        }
        y[0] = 1;
        y[1] = 0;
        const auto c = select_threshold(r, y);
        std::vector<double> s = r;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        std::vector<double> candidates = {-std::numeric_limits<double>::infinity()};
        for (std::size_t i = 0; i + 1 < s.size(); ++i) candidates.push_back(0.5 * (s[i] + s[i + 1]));
        candidates.push_back(std::numeric_limits<double>::infinity());
        for (double d : candidates) {
            if (d >= c.d) break;
            CHECK(oracle::youden_at(r, y, d) < c.j);
        }
    }
}

TEST_CASE("assess: boundary, zero residual and unset threshold") {
    CHECK(assess_residual(0.5, 0.5) == 1);
    CHECK(assess_residual(0.0, 0.0) == 1);
    CHECK(assess_residual(0.50001, 0.5) == 0);
    std::mt19937_64 rng(6);
    auto model = from_pca(pca_fit(random_rows(20, 150, rng)));
    CHECK(code_of([&] { assess(model, model.pca->mean); }) == ErrorCode::ThresholdUnset);
    model.threshold = 0.0;
    CHECK(assess(model, model.pca->mean) == 1);
}

TEST_CASE("property: verdicts are monotone in the residual, and r = 0 is always normal") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 1000; ++i) {
            const auto v = oracle::random_vector(3, rng, 0, 2);
            const double r1 = std::min(v[0], v[1]), r2 = std::max(v[0], v[1]), d = v[2];
            if (assess_residual(r1, d) == 0) CHECK(assess_residual(r2, d) == 0);
            CHECK(assess_residual(0.0, d) == 1);
        }
    }
}
