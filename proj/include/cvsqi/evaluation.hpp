#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cvsqi::eval {

/// Positive class = quality 1 (normal cycle).
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// preds and labels are 0/1; labels use the evaluation encoding.
ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels);

/// A metric with a zero denominator is left empty rather than reported as 0.
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> ppv;
    std::optional<double> npv;
    std::optional<double> sensitivity;
    std::optional<double> specificity;

    /// Value by name ("accuracy", "ppv", ...); throws UndefinedMetric when empty.
    double get(std::string_view name) const;
};

Metrics metrics(const ConfusionCounts& c);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Points from threshold +inf (0,0) down to -inf (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
};

struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};

/// Higher score = more likely positive. Equal scores form a single threshold
/// step, so ties contribute half credit. Throws SingleClassDataset.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

struct SubjectSplit {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

/// Partitions subjects (not items) so the item fractions approach the
/// targets: seeded shuffle, largest-first greedy assignment to the split with
/// the largest remaining deficit, then single-move/swap refinement. Every
/// split receives at least one subject. Throws TooFewSubjects (< 3).
SubjectSplit split_by_subject(std::span<const std::string> item_subjects,
                              std::array<double, 3> fractions = {0.8, 0.1, 0.1}, std::uint64_t seed = 0);

/// Achieved item fractions (train, val, test) of a split.
std::array<double, 3> split_fractions(const SubjectSplit& split, std::span<const std::string> item_subjects);

}  // namespace cvsqi::eval
