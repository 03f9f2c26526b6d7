#include "cvsqi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cvsqi/errors.hpp"

namespace cvsqi::eval {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                                   std::to_string(labels.size()) + " labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] != 0, y = labels[i] != 0;
        if (p && y) ++c.tp;
        else if (!p && !y) ++c.tn;
        else if (p && !y) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double Metrics::get(std::string_view name) const {
    const std::optional<double>* m = nullptr;
    if (name == "accuracy") m = &accuracy;
    else if (name == "ppv") m = &ppv;
    else if (name == "npv") m = &npv;
    else if (name == "sensitivity") m = &sensitivity;
    else if (name == "specificity") m = &specificity;
    if (!m) throw Error(ErrorCode::ParseError, "unknown metric '" + std::string(name) + "'");
    if (!*m) throw Error(ErrorCode::UndefinedMetric, std::string(name));
    return **m;
}

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.ppv = ratio(c.tp, c.tp + c.fp);
    m.npv = ratio(c.tn, c.tn + c.fn);
    m.sensitivity = ratio(c.tp, c.tp + c.fn);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    return m;
}

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                                   std::to_string(labels.size()) + " labels");
    const std::size_t n_pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw Error(ErrorCode::SingleClassDataset, "ROC needs both classes (" + std::to_string(n_pos) + " positive, " +
                                                       std::to_string(n_neg) + " negative)");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult r;
    r.curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double area = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        std::size_t dtp = 0, dfp = 0;
        for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] != 0 ? dtp : dfp)++;
        // Trapezoid in count units, normalized once at the end.
        area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
        tp += dtp;
        fp += dfp;
        r.curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                                  static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    r.auc = area / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return r;
}

namespace {

struct SplitState {
    std::vector<int> assign;  // per subject: 0 train, 1 val, 2 test
    std::array<std::size_t, 3> load{};
    std::array<std::size_t, 3> members{};
};

/// (max deviation, summed deviation) of achieved fractions from targets.
std::pair<double, double> objective(const std::array<std::size_t, 3>& load, std::size_t total,
                                    const std::array<double, 3>& f) {
    double mx = 0.0, sum = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double d = std::abs(static_cast<double>(load[k]) / static_cast<double>(total) - f[k]);
        mx = std::max(mx, d);
        sum += d;
    }
    return {mx, sum};
}

}  // namespace

SubjectSplit split_by_subject(std::span<const std::string> item_subjects, std::array<double, 3> fractions,
                              std::uint64_t seed) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : item_subjects) ++counts[s];
    if (counts.size() < 3)
        throw Error(ErrorCode::TooFewSubjects, std::to_string(counts.size()) + " subjects; need at least 3");

    std::vector<std::string> subjects;
    std::vector<std::size_t> sizes;
    for (const auto& [s, n] : counts) subjects.push_back(s);
    std::mt19937_64 rng(seed);
    std::shuffle(subjects.begin(), subjects.end(), rng);
    std::stable_sort(subjects.begin(), subjects.end(),
                     [&](const std::string& a, const std::string& b) { return counts[a] > counts[b]; });
    for (const auto& s : subjects) sizes.push_back(counts[s]);

    const std::size_t total = item_subjects.size();
    constexpr std::int64_t kUnit = 1'000'000;
    std::array<std::int64_t, 3> weight{};
    for (int k = 0; k < 3; ++k) weight[k] = std::llround(fractions[k] * static_cast<double>(kUnit));

    SplitState st;
    st.assign.assign(subjects.size(), 0);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        int best = 0;
        std::int64_t best_deficit = 0;
        for (int k = 0; k < 3; ++k) {
            const std::int64_t deficit = weight[k] * static_cast<std::int64_t>(total) -
                                         kUnit * static_cast<std::int64_t>(st.load[k]);
            if (k == 0 || deficit > best_deficit) {
                best = k;
                best_deficit = deficit;
            }
        }
        st.assign[i] = best;
        st.load[best] += sizes[i];
        ++st.members[best];
    }

    // Every split gets a subject: move the smallest subject of the most
    // populated split into each empty one.
    for (int k = 0; k < 3; ++k) {
        if (st.members[k] > 0) continue;
        const int donor = static_cast<int>(std::max_element(st.members.begin(), st.members.end()) - st.members.begin());
        for (std::size_t i = subjects.size(); i-- > 0;) {
            if (st.assign[i] != donor) continue;
            st.assign[i] = k;
            st.load[donor] -= sizes[i];
            st.load[k] += sizes[i];
            --st.members[donor];
            ++st.members[k];
            break;
        }
    }

    // Local refinement: accept single moves and pairwise swaps that improve
    // the objective without emptying a split.
    auto current = objective(st.load, total, fractions);
    for (bool improved = true; improved;) {
        improved = false;
        for (std::size_t i = 0; i < subjects.size() && !improved; ++i) {
            const int from = st.assign[i];
            if (st.members[from] <= 1) continue;
            for (int to = 0; to < 3 && !improved; ++to) {
                if (to == from) continue;
                auto load = st.load;
                load[from] -= sizes[i];
                load[to] += sizes[i];
                const auto obj = objective(load, total, fractions);
                if (obj < current) {
                    st.assign[i] = to;
                    st.load = load;
                    --st.members[from];
                    ++st.members[to];
                    current = obj;
                    improved = true;
                }
            }
        }
        for (std::size_t i = 0; i < subjects.size() && !improved; ++i) {
            for (std::size_t j = i + 1; j < subjects.size() && !improved; ++j) {
                const int a = st.assign[i], b = st.assign[j];
                if (a == b || sizes[i] == sizes[j]) continue;
                auto load = st.load;
                load[a] = load[a] - sizes[i] + sizes[j];
                load[b] = load[b] - sizes[j] + sizes[i];
                const auto obj = objective(load, total, fractions);
                if (obj < current) {
                    std::swap(st.assign[i], st.assign[j]);
                    st.load = load;
                    current = obj;
                    improved = true;
                }
            }
        }
    }

    SubjectSplit out;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        auto& dst = st.assign[i] == 0 ? out.train : st.assign[i] == 1 ? out.val : out.test;
        dst.push_back(subjects[i]);
    }
    for (auto* v : {&out.train, &out.val, &out.test}) std::sort(v->begin(), v->end());
    return out;
}

std::array<double, 3> split_fractions(const SubjectSplit& split, std::span<const std::string> item_subjects) {
    std::array<std::size_t, 3> n{};
    for (const auto& s : item_subjects) {
        if (std::binary_search(split.train.begin(), split.train.end(), s)) ++n[0];
        else if (std::binary_search(split.val.begin(), split.val.end(), s)) ++n[1];
        else if (std::binary_search(split.test.begin(), split.test.end(), s)) ++n[2];
    }
    const double total = static_cast<double>(item_subjects.size());
    return {n[0] / total, n[1] / total, n[2] / total};
}

}  // namespace cvsqi::eval
