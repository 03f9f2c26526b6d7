#include "cvsqi/quality_label.hpp"

#include <string>

#include "cvsqi/errors.hpp"

namespace cvsqi {

QualityClass quality_from_code(int code) {
    switch (code) {
        case 1: return QualityClass::Normal;
        case 2: return QualityClass::Ambiguous;
        case 0: return QualityClass::MotionInfluenced;
        default: break;
    }
    throw Error(ErrorCode::ParseError, "unknown label code " + std::to_string(code));
}

std::string_view to_string(QualityClass c) noexcept {
    switch (c) {
        case QualityClass::Normal: return "normal";
        case QualityClass::Ambiguous: return "ambiguous";
        case QualityClass::MotionInfluenced: return "motion";
    }
    return "?";
}

}  // namespace cvsqi
