#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cvsqi::nn {

/// Row-major 2-D array of doubles. Signals are (length, channels); dense
/// weights are (rows, cols); vectors are (n, 1).
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> values);

    static Tensor column(std::span<const double> values);

    std::size_t size() const noexcept { return data.size(); }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    std::span<double> span() noexcept { return data; }
    std::span<const double> span() const noexcept { return data; }

    bool same_shape(const Tensor& other) const noexcept {
        return rows == other.rows && cols == other.cols;
    }
    void fill(double v);

    std::string shape_string() const;
};

}  // namespace cvsqi::nn
