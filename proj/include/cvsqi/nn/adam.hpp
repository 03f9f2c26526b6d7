#pragma once

#include "cvsqi/nn/params.hpp"

namespace cvsqi::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a single parameter from its accumulated
/// gradient. Each parameter keeps its own step counter, so updating a set
/// jointly or tensor by tensor gives identical results.
void adam_step(Param& p, double lr, const AdamConfig& cfg = {});

/// Applies adam_step to every parameter. Gradients are left untouched.
void adam_step(ParamSet& params, double lr, const AdamConfig& cfg = {});

}  // namespace cvsqi::nn
