#include "cvsqi/nn/tensor.hpp"

#include <algorithm>

#include "cvsqi/errors.hpp"

namespace cvsqi::nn {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
        throw Error(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                                  " does not match shape " + shape_string());
    }
}

Tensor Tensor::column(std::span<const double> values) {
    return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

std::string Tensor::shape_string() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace cvsqi::nn
