#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <doctest.h>

#include "cvsqi/errors.hpp"
#include "cvsqi/evaluation.hpp"
#include "cvsqi/manifold.hpp"
#include "support/oracles.hpp"

using namespace cvsqi;
using namespace cvsqi::eval;

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

std::vector<int> random_labels(std::size_t n, std::mt19937_64& rng) {
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng() % 2);
    y[0] = 1;
    y[n - 1] = 0;
    return y;
}

std::vector<std::string> items_for(const std::vector<std::size_t>& sizes) {
    std::vector<std::string> items;
    for (std::size_t s = 0; s < sizes.size(); ++s)
        for (std::size_t i = 0; i < sizes[s]; ++i) items.push_back("P" + std::to_string(s));
    return items;
}

double max_deviation(const std::array<double, 3>& got, const std::array<double, 3>& want) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d = std::max(d, std::abs(got[k] - want[k]));
    return d;
}

}  // namespace

TEST_CASE("confusion: all correct, inverted, length mismatch") {
    const std::vector<int> y = {1, 1, 0, 1, 0, 0, 1};
    const auto c = confusion(y, y);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tp == 4);
    CHECK(c.tn == 3);
    std::vector<int> inv(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) inv[i] = 1 - y[i];
    const auto d = confusion(inv, y);
    CHECK(d.fn == c.tp);
    CHECK(d.tp == c.fn);
    CHECK(d.fp == c.tn);
    CHECK(d.tn == c.fp);
    CHECK(code_of([&] { confusion(std::vector<int>{1}, y); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("property: confusion matches per-element counting") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        const auto y = random_labels(500, rng), p = random_labels(500, rng);
        ConfusionCounts o;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (p[i] == 1 && y[i] == 1) o.tp++;
            if (p[i] == 0 && y[i] == 0) o.tn++;
            if (p[i] == 1 && y[i] == 0) o.fp++;
            if (p[i] == 0 && y[i] == 1) o.fn++;
        }
        CHECK(confusion(p, y) == o);
    }
}

TEST_CASE("metrics: hand arithmetic and undefined denominators") {
    const auto m = metrics({90, 5, 3, 2});
    CHECK(m.get("accuracy") == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(m.get("ppv") == doctest::Approx(90.0 / 93.0).epsilon(1e-15));
    CHECK(m.get("ppv") == doctest::Approx(0.9677).epsilon(1e-4));
    CHECK(m.get("npv") == doctest::Approx(0.7143).epsilon(1e-4));
    CHECK(m.get("sensitivity") == doctest::Approx(0.9783).epsilon(1e-4));
    CHECK(m.get("specificity") == 0.625);

    const auto all_tp = metrics({10, 0, 0, 0});
    CHECK(all_tp.get("accuracy") == 1.0);
    CHECK_FALSE(all_tp.npv.has_value());
    CHECK(code_of([&] { all_tp.get("npv"); }) == ErrorCode::UndefinedMetric);

    // Always-positive predictor on 80/20 data.
    std::vector<int> y(100, 1);
    std::fill(y.begin() + 80, y.end(), 0);
    const auto a = metrics(confusion(std::vector<int>(100, 1), y));
    CHECK(a.get("specificity") == 0.0);
    CHECK(a.get("sensitivity") == 1.0);
}

TEST_CASE("property: identity predictor scores one on every defined metric") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        const auto y = random_labels(1 + rng() % 300, rng);
        const auto m = metrics(confusion(y, y));
        for (const auto& v : {m.accuracy, m.ppv, m.npv, m.sensitivity, m.specificity})
            if (v) CHECK(*v == 1.0);
    }
}

TEST_CASE("roc_auc: separated, all tied, single class") {
    const std::vector<double> s = {0.9, 0.8, 0.3, 0.1};
    const std::vector<int> y = {1, 1, 0, 0};
    CHECK(roc_auc(s, y).auc == 1.0);
    CHECK(roc_auc(std::vector<double>(4, 0.7), y).auc == 0.5);
    CHECK(code_of([&] { roc_auc(s, std::vector<int>(4, 1)); }) == ErrorCode::SingleClassDataset);
    const auto r = roc_auc(std::vector<double>(4, 0.7), y);
    CHECK(r.curve.points.size() == 2);
}

TEST_CASE("property: AUC equals Mann-Whitney pair counting on 100 instances of size <= 200") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t n = 2 + rng() % 199;
            const auto y = random_labels(n, rng);
            std::vector<double> s(n);
            // Coarse rounding forces ties.
            for (auto& v : s) v = std::round(oracle::random_vector(1, rng, 0, 10)[0]) / 10.0;
            worst = std::max(worst, std::abs(roc_auc(s, y).auc - oracle::mann_whitney_auc(s, y)));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("property: ROC curve runs monotonically from (0,0) to (1,1)") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        for (int rep = 0; rep < 50; ++rep) {
            const std::size_t n = 2 + rng() % 100;
            const auto y = random_labels(n, rng);
            const auto s = oracle::random_vector(n, rng);
            const auto& p = roc_auc(s, y).curve.points;
            CHECK(p.front().fpr == 0.0);
            CHECK(p.front().tpr == 0.0);
            CHECK(p.back().fpr == 1.0);
            CHECK(p.back().tpr == 1.0);
            for (std::size_t i = 1; i < p.size(); ++i) {
                CHECK(p[i].fpr >= p[i - 1].fpr);
                CHECK(p[i].tpr >= p[i - 1].tpr);
            }
        }
    }
}

TEST_CASE("property: AUC is invariant under strictly increasing transforms") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        for (int rep = 0; rep < 50; ++rep) {
            const std::size_t n = 2 + rng() % 150;
            const auto y = random_labels(n, rng);
            auto s = oracle::random_vector(n, rng, -2, 2);
            for (std::size_t i = 0; i + 1 < n; i += 5) s[i + 1] = s[i];
            std::vector<double> t(n);
            for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) + s[i];
            CHECK(roc_auc(s, y).auc == roc_auc(t, y).auc);
        }
    }
}

TEST_CASE("property: J from confusion counts matches the threshold selector") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        for (int rep = 0; rep < 30; ++rep) {
            const std::size_t n = 5 + rng() % 100;
            const auto y = random_labels(n, rng);
            const auto r = oracle::random_vector(n, rng, 0, 1);
            const auto choice = manifold::select_threshold(r, y);
            for (double d : {choice.d, 0.25, 0.5, 0.75}) {
                std::vector<int> preds(n);
                for (std::size_t i = 0; i < n; ++i) preds[i] = manifold::assess_residual(r[i], d);
                const auto m = metrics(confusion(preds, y));
                const double j = m.get("sensitivity") + m.get("specificity") - 1.0;
                CHECK(j == doctest::Approx(oracle::youden_at(r, y, d)).epsilon(1e-14));
                if (d == choice.d) CHECK(j == doctest::Approx(choice.j).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("split: ten equal subjects go 8/1/1") {
    const auto items = items_for(std::vector<std::size_t>(10, 30));
    const auto s = split_by_subject(items);
    CHECK(s.train.size() == 8);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
    const auto f = split_fractions(s, items);
    CHECK(f[0] == doctest::Approx(0.8));
    CHECK(code_of([] { split_by_subject(items_for({5, 5})); }) == ErrorCode::TooFewSubjects);
}

TEST_CASE("property: splits are disjoint, exhaustive, deterministic and near the targets") {
    for (auto seed : oracle::kSeeds) {
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> sizes(20 + rng() % 30);
        for (auto& s : sizes) s = 40 + rng() % 80;
        const auto items = items_for(sizes);
        const auto a = split_by_subject(items, {0.8, 0.1, 0.1}, seed);
        const auto b = split_by_subject(items, {0.8, 0.1, 0.1}, seed);
        CHECK(a.train == b.train);
        CHECK(a.test == b.test);
        std::set<std::string> all;
        for (const auto* part : {&a.train, &a.val, &a.test}) {
            CHECK_FALSE(part->empty());
            for (const auto& s : *part) CHECK(all.insert(s).second);
        }
        CHECK(all.size() == sizes.size());
        CHECK(max_deviation(split_fractions(a, items), {0.8, 0.1, 0.1}) <= 0.05);
    }
}

TEST_CASE("property: greedy split is within 0.05 of the exhaustive optimum on 6 subjects") {
    for (auto seed : oracle::kSeeds) {
        CAPTURE(seed);
        std::mt19937_64 rng(seed);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<std::size_t> sizes(6);
            for (auto& s : sizes) s = 1 + rng() % 200;
            const auto items = items_for(sizes);
            const std::array<double, 3> target = {0.8, 0.1, 0.1};
            std::size_t total = 0;
            for (auto s : sizes) total += s;

            double best = 1.0;
            for (int code = 0; code < 729; ++code) {
                std::array<std::size_t, 3> load{}, members{};
                for (int i = 0, c = code; i < 6; ++i, c /= 3) {
                    load[c % 3] += sizes[i];
                    ++members[c % 3];
                }
                if (members[0] == 0 || members[1] == 0 || members[2] == 0) continue;
                std::array<double, 3> f{};
                for (int k = 0; k < 3; ++k) f[k] = static_cast<double>(load[k]) / static_cast<double>(total);
                best = std::min(best, max_deviation(f, target));
            }
            const auto got = max_deviation(split_fractions(split_by_subject(items, target, seed), items), target);
            CHECK(got <= best + 0.05);
        }
    }
}
