#pragma once
// One-class quality models: a low-dimensional reconstruction of normal
// cycles (PCA or a variational autoencoder) and a residual threshold.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cvsqi/nn/network.hpp"
#include "cvsqi/preprocessing.hpp"

namespace cvsqi::manifold {

enum class Kind { PCA, VAE, BetaVAE, ConvVAE, BetaConvVAE };

inline constexpr Kind kAllKinds[] = {Kind::PCA, Kind::VAE, Kind::BetaVAE, Kind::ConvVAE, Kind::BetaConvVAE};
inline constexpr std::size_t kLatentDim = 10;

/// CLI names: pca, vae, bvae, cvae, bcvae.
std::string_view to_string(Kind k) noexcept;
Kind kind_from(std::string_view name);
bool is_vae(Kind k) noexcept;
bool is_convolutional(Kind k) noexcept;
/// 1 for the plain VAEs, 3 for bvae, 1/2 for bcvae.
double default_beta(Kind k) noexcept;

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct SymmetricEigen {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric n x n row-major matrix.
SymmetricEigen symmetric_eigen(std::vector<double> a, std::size_t n);

struct PcaModel {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // k orthonormal rows
    std::vector<double> explained_variance;
};

/// Top-k principal directions of the sample covariance. Throws
/// InsufficientSamples when there are fewer than k samples.
PcaModel pca_fit(std::span<const std::vector<double>> samples, std::size_t k = kLatentDim);

/// mean + sum_i <x - mean, v_i> v_i. Throws NotFitted.
std::vector<double> pca_project(const PcaModel& m, std::span<const double> x);

// ---------------------------------------------------------------------------
// Variational autoencoders
// ---------------------------------------------------------------------------

/// Encoder ends in a 20-vector: rows 0..9 are the mean, rows 10..19 log sigma.
nn::Network encoder_for(Kind k);
nn::Network decoder_for(Kind k);

struct VaeModel {
    Kind kind = Kind::VAE;
    double beta = 1.0;
    nn::Network encoder;
    nn::Network decoder;
    nn::ParamSet params;  // encoder tensors, then decoder tensors
    std::size_t decoder_offset = 0;
};

VaeModel vae_build(Kind k, double beta, std::uint64_t seed);

struct VaeOutput {
    std::vector<double> reconstruction;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> z;
};

/// Inference mode (no noise): z = mu. With noise, z = mu + sigma * noise.
VaeOutput vae_forward(const VaeModel& m, std::span<const double> x, std::span<const double> noise = {});
/// Training mode with noise drawn from `rng`.
VaeOutput vae_forward(const VaeModel& m, std::span<const double> x, std::mt19937_64& rng);

/// 0.5 * sum(mu^2 + sigma^2 - log sigma^2 - 1). Throws NonPositiveSigma.
double kl_term(std::span<const double> mu, std::span<const double> sigma);

/// ||x - decode(z)||^2 + beta * KL for one cycle with the given noise.
nn::Var vae_loss_graph(nn::Graph& g, VaeModel& m, const nn::Tensor& x, const nn::Tensor& noise, double beta);

/// Counts, by class, the samples whose gradients reached a parameter update.
struct TrainingAudit {
    std::size_t positive_samples = 0;
    std::size_t negative_samples = 0;
};

struct VaeTrainConfig {
    std::size_t epochs = 30;
    double lr = 1e-3;
    std::size_t batch = 64;
    std::uint64_t seed = 0;
};

struct VaeTrainReport {
    double initial_recon = 0.0;       // mean ||x - x_hat||^2 before training, z = mu
    std::vector<double> train_loss;   // mean recon + beta * KL per epoch
    std::vector<double> train_recon;  // mean recon term per epoch
    std::vector<double> val_recon;    // z = mu
    std::size_t best_epoch = 0;
    TrainingAudit audit;
};

/// Trains on normal cycles only; keeps the epoch with the lowest validation
/// reconstruction. Throws ContainsNegativeSamples if any cycle in either set
/// is not labelled normal, EmptySplit if a set is empty.
VaeTrainReport vae_train(VaeModel& m, std::span<const prep::NormalizedCycle> train_set,
                         std::span<const prep::NormalizedCycle> val_set, const VaeTrainConfig& cfg);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct ManifoldModel {
    Kind kind = Kind::PCA;
    double beta = 0.0;
    std::optional<PcaModel> pca;
    std::optional<VaeModel> vae;
    std::optional<double> threshold;
};

ManifoldModel from_pca(PcaModel p);
ManifoldModel from_vae(VaeModel v);

/// Deterministic reconstruction (z = mu for VAEs). Throws NotFitted.
std::vector<double> reconstruct(const ManifoldModel& m, std::span<const double> x);
/// ||x - reconstruct(x)||_2.
double residual(const ManifoldModel& m, std::span<const double> x);
std::vector<double> residuals(const ManifoldModel& m, std::span<const prep::NormalizedCycle> cycles);

struct ThresholdChoice {
    double d = 0.0;
    double j = 0.0;
};

/// Maximizes sensitivity + specificity - 1 over the midpoints between sorted
/// distinct residuals and the two infinite sentinels, preferring the smaller
/// d on ties. labels: 1 normal, 0 otherwise. Throws SingleClassDataset.
ThresholdChoice select_threshold(std::span<const double> residuals, std::span<const int> labels);

constexpr int assess_residual(double r, double d) noexcept { return r <= d ? 1 : 0; }
/// Throws ThresholdUnset.
int assess(const ManifoldModel& m, std::span<const double> x);

}  // namespace cvsqi::manifold
