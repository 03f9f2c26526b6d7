#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvsqi/nn/tensor.hpp"

namespace cvsqi::nn {

/// One trainable tensor with its gradient accumulator and Adam state.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m;  // first moment
    Tensor v;  // second moment
    std::uint64_t step = 0;

    Param(std::string n, Tensor init);
};

class ParamSet {
public:
    Param& add(std::string name, Tensor init);

    std::size_t size() const noexcept { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    void zero_grad();
    /// Total number of scalar parameters.
    std::size_t scalar_count() const;

private:
    std::vector<Param> params_;
};

}  // namespace cvsqi::nn
