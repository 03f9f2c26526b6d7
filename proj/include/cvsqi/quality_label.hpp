#pragma once

#include <string_view>

namespace cvsqi {

/// Per-cycle annotation. Ambiguous cycles train as a soft 0.25 target but
/// count as negatives when scoring.
enum class QualityClass { Normal, Ambiguous, MotionInfluenced };

constexpr double train_value(QualityClass c) noexcept {
    switch (c) {
        case QualityClass::Normal: return 1.0;
        case QualityClass::Ambiguous: return 0.25;
        case QualityClass::MotionInfluenced: return 0.0;
    }
    return 0.0;
}

constexpr int eval_value(QualityClass c) noexcept { return c == QualityClass::Normal ? 1 : 0; }

/// File encoding: 1 Normal, 2 Ambiguous, 0 MotionInfluenced.
constexpr int label_code(QualityClass c) noexcept {
    switch (c) {
        case QualityClass::Normal: return 1;
        case QualityClass::Ambiguous: return 2;
        case QualityClass::MotionInfluenced: return 0;
    }
    return -1;
}

/// Throws ParseError for codes other than 0, 1, 2.
QualityClass quality_from_code(int code);

std::string_view to_string(QualityClass c) noexcept;

}  // namespace cvsqi
