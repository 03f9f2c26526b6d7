#pragma once
// Supervised per-cycle quality classifiers: logistic regression, two MLPs and
// three truncations of a small VGG-style 1-D CNN, all ending in a sigmoid.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cvsqi/nn/network.hpp"
#include "cvsqi/preprocessing.hpp"

namespace cvsqi::disc {

enum class Architecture { LR, MLP1, MLP2, VGG16_3, VGG16_4, VGG16_5 };

inline constexpr Architecture kAllArchitectures[] = {Architecture::LR,      Architecture::MLP1,
                                                     Architecture::MLP2,    Architecture::VGG16_3,
                                                     Architecture::VGG16_4, Architecture::VGG16_5};

/// CLI names: lr, mlp1, mlp2, vgg3, vgg4, vgg5.
std::string_view to_string(Architecture a) noexcept;
Architecture architecture_from(std::string_view name);
bool is_convolutional(Architecture a) noexcept;

nn::Network network_for(Architecture a);

struct DiscriminativeModel {
    Architecture architecture = Architecture::LR;
    nn::Network network;
    nn::ParamSet params;
    double decision_threshold = 0.5;  // verdict 1 iff p >= this
};

DiscriminativeModel build(Architecture a, std::uint64_t seed);

/// Probability that the cycle is normal. Throws ShapeMismatch unless the
/// input has exactly 150 samples.
double forward(const DiscriminativeModel& m, std::span<const double> x);
int verdict(const DiscriminativeModel& m, double probability) noexcept;

struct ClassWeights {
    double pos = 1.0;
    double neg = 1.0;
};

double weighted_ce(double pred, double y, const ClassWeights& w);

/// Inverse-frequency weights from soft training targets: each target y adds
/// y to the positive mass and 1 - y to the negative mass. Throws
/// SingleClassDataset when either mass is zero.
ClassWeights compute_class_weights(std::span<const double> train_values);
ClassWeights compute_class_weights(std::span<const prep::NormalizedCycle> train);

/// Differentiable loss for one cycle; used by training and gradient checks.
nn::Var loss_graph(nn::Graph& g, DiscriminativeModel& m, const nn::Tensor& x, double y, const ClassWeights& w);

/// Receptive field of one unit in the last conv layer. Throws NotConvolutional.
int compute_receptive_field(Architecture a);

struct TrainConfig {
    std::size_t epochs = 20;
    double lr = 1e-3;
    std::size_t batch = 64;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss;  // mean weighted CE per epoch
    std::vector<double> val_loss;
    std::vector<double> val_auc;     // empty when val holds one class only
    std::size_t best_epoch = 0;      // 1-based; 0 = initial parameters kept
    ClassWeights weights;
};

/// Minibatch Adam on weighted CE. The returned model holds the parameters of
/// the epoch with the best validation AUC (lowest validation loss when the
/// validation set has a single class). Throws EmptySplit.
TrainReport train(DiscriminativeModel& m, std::span<const prep::NormalizedCycle> train_set,
                  std::span<const prep::NormalizedCycle> val_set, const TrainConfig& cfg);

/// Scores for a set of cycles, in order.
std::vector<double> predict(const DiscriminativeModel& m, std::span<const prep::NormalizedCycle> cycles);

}  // namespace cvsqi::disc
