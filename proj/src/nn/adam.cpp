#include "cvsqi/nn/adam.hpp"

#include <cmath>

#include "cvsqi/errors.hpp"

namespace cvsqi::nn {

void adam_step(Param& p, double lr, const AdamConfig& cfg) {
    if (!p.grad.same_shape(p.value) || !p.m.same_shape(p.value) || !p.v.same_shape(p.value))
        throw Error(ErrorCode::ShapeMismatch, "adam: state of '" + p.name + "' does not match its value");
    ++p.step;
    const double t = static_cast<double>(p.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    const std::size_t n = p.value.size();
    double* w = p.value.data.data();
    double* m = p.m.data.data();
    double* v = p.v.data.data();
    const double* g = p.grad.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

void adam_step(ParamSet& params, double lr, const AdamConfig& cfg) {
    for (auto& p : params) adam_step(p, lr, cfg);
}

}  // namespace cvsqi::nn
