#pragma once
// Reference implementations the tests compare against. Each one is written
// from the definition, in the most literal loop order, and shares no code
// with the library.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cvsqi/nn/params.hpp"
#include "cvsqi/nn/tensor.hpp"
#include "cvsqi/preprocessing.hpp"

namespace oracle {

using cvsqi::nn::Tensor;

inline constexpr std::uint64_t kSeeds[] = {1, 2, 3};

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);
std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

// --- network kernels -------------------------------------------------------

/// y_r = b_r + sum_c W_rc x_c.
Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b);
/// Cross-correlation over an explicitly zero-padded copy of x.
Tensor conv(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width, std::size_t stride);
/// Gather form of the transposed convolution: each output position collects
/// every (input position, tap) pair that lands on it.
Tensor conv_transpose(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width, std::size_t stride,
                      std::size_t out_length);
Tensor maxpool(const Tensor& x);

// --- ranking and thresholds ------------------------------------------------

/// (concordant pairs + ties / 2) / (n_pos * n_neg).
double mann_whitney_auc(std::span<const double> scores, std::span<const int> labels);

/// Sensitivity + specificity - 1 of the rule "normal iff r <= d".
double youden_at(std::span<const double> residuals, std::span<const int> labels, double d);

/// Best J over `n` evenly spaced thresholds spanning the residual range
/// (widened by one step on each side) plus every observed residual.
double youden_grid_best(std::span<const double> residuals, std::span<const int> labels, std::size_t n);

// --- PCA --------------------------------------------------------------------

/// Rank-k projector onto the top principal subspace from a dense
/// self-adjoint eigendecomposition of the sample covariance (row-major d x d).
std::vector<double> eigen_projector(std::span<const std::vector<double>> samples, std::size_t k);
/// sum_i v_i v_i^T for the given rows.
std::vector<double> projector_from(const std::vector<std::vector<double>>& rows);

// --- gradients --------------------------------------------------------------

struct GradCheck {
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::string worst;  // "param[index]"
};

/// Relative error |a - n| / max(|a|, |n|, floor). The floor sits about two
/// orders above the roundoff of a central difference on an O(1) loss, so
/// derivatives at roundoff level are compared absolutely.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Central finite differences on `coords` parameter coordinates: at least
/// one per tensor, the rest drawn uniformly over all scalars. `loss(true)`
/// must leave d loss / d param in Param::grad (the checker zeroes grads
/// first); `loss(false)` only evaluates.
GradCheck check_param_gradients(cvsqi::nn::ParamSet& params, const std::function<double(bool)>& loss,
                                std::size_t coords, std::uint64_t seed, double h = 1e-6);

/// Same for a free input vector: `f(x, grad)` returns the value and, when
/// grad is non-null, fills d f / d x.
GradCheck check_input_gradient(std::vector<double> x,
                               const std::function<double(const std::vector<double>&, std::vector<double>*)>& f,
                               double h = 1e-6);

// --- synthetic cycles -------------------------------------------------------

/// Smooth normal-looking beat of peak ~1 with a random rise point and gain.
std::vector<double> normal_beat(std::mt19937_64& rng);

/// `n` normalized cycles of one class for subject ids S000..: normal beats,
/// or beats with a large additive bump for negatives.
std::vector<cvsqi::prep::NormalizedCycle> toy_cycles(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed,
                                                     std::size_t subjects = 6);

}  // namespace oracle
