#pragma once

#include <cstddef>

#include "cvsqi/nn/graph.hpp"
#include "cvsqi/nn/tensor.hpp"

namespace cvsqi::nn {

// ---------------------------------------------------------------------------
// Plain tensor kernels
// ---------------------------------------------------------------------------

/// y = W x + b. `x` may have any shape whose element count equals W.cols;
/// the result is a (W.rows, 1) column.
Tensor dense_forward(const Tensor& x, const Tensor& W, const Tensor& b);

/// Output length of a "same"-padded convolution: pad = (width - 1) / 2 on both
/// sides, giving L for stride 1 and ceil(L / 2) for stride 2 at width 3.
std::size_t conv_output_length(std::size_t length, std::size_t width, std::size_t stride);

/// Cross-correlation of x (L x C_in) with K ((width * C_in) x C_out) laid out
/// as K[(tap * C_in + c_in) * C_out + c_out], plus per-channel bias b (C_out x 1).
Tensor conv1d_forward(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width,
                      std::size_t stride);

/// Adjoint of conv1d_forward mapping out_length -> x.rows, plus bias. The
/// output length must be one the forward convolution maps back onto x.rows.
Tensor conv_transpose1d_forward(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width,
                                std::size_t stride, std::size_t out_length);

/// Window 2, stride 2, floor(L / 2) outputs per channel.
Tensor maxpool1d(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
double sigmoid(double x);

// ---------------------------------------------------------------------------
// Recorded (differentiable) versions
// ---------------------------------------------------------------------------
namespace ad {

Var dense(Graph& g, Var x, Var W, Var b);
Var conv1d(Graph& g, Var x, Var K, Var b, std::size_t width, std::size_t stride);
Var conv_transpose1d(Graph& g, Var x, Var K, Var b, std::size_t width, std::size_t stride,
                     std::size_t out_length);
Var maxpool1d(Graph& g, Var x);
Var relu(Graph& g, Var x);
Var sigmoid(Graph& g, Var x);
Var reshape(Graph& g, Var x, std::size_t rows, std::size_t cols);
/// Rows [begin, begin + count) of x.
Var slice_rows(Graph& g, Var x, std::size_t begin, std::size_t count);

/// z = mu + exp(log_sigma) * noise, with noise held constant.
Var reparameterize(Graph& g, Var mu, Var log_sigma, const Tensor& noise);

/// Scalar a + scale * b; both inputs must be 1x1.
Var add_scaled(Graph& g, Var a, Var b, double scale);

/// -zeta_pos * y * log(p) - zeta_neg * (1 - y) * log(1 - p), p clamped to
/// [1e-12, 1 - 1e-12].
Var weighted_bce(Graph& g, Var pred, double y, double zeta_pos, double zeta_neg);

/// Squared Euclidean distance to a fixed target.
Var squared_error(Graph& g, Var recon, const Tensor& target);

/// 0.5 * sum(mu^2 + sigma^2 - log sigma^2 - 1) with sigma = exp(log_sigma).
Var kl_standard_normal(Graph& g, Var mu, Var log_sigma);

}  // namespace ad

/// Closed-form loss helpers used outside the graph.
double weighted_bce_value(double pred, double y, double zeta_pos, double zeta_neg);
double kl_value(const Tensor& mu, const Tensor& sigma);

}  // namespace cvsqi::nn
