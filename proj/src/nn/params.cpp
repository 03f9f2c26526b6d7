#include "cvsqi/nn/params.hpp"

namespace cvsqi::nn {

Param::Param(std::string n, Tensor init)
    : name(std::move(n)),
      value(std::move(init)),
      grad(value.rows, value.cols),
      m(value.rows, value.cols),
      v(value.rows, value.cols) {}

Param& ParamSet::add(std::string name, Tensor init) {
    params_.emplace_back(std::move(name), std::move(init));
    return params_.back();
}

Param* ParamSet::find(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

const Param* ParamSet::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

void ParamSet::zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

}  // namespace cvsqi::nn
