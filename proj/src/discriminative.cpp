#include "cvsqi/discriminative.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "cvsqi/errors.hpp"
#include "cvsqi/evaluation.hpp"
#include "cvsqi/nn/adam.hpp"
#include "cvsqi/nn/ops.hpp"

namespace cvsqi::disc {

using nn::Activation;
using nn::Network;

std::string_view to_string(Architecture a) noexcept {
    switch (a) {
        case Architecture::LR: return "lr";
        case Architecture::MLP1: return "mlp1";
        case Architecture::MLP2: return "mlp2";
        case Architecture::VGG16_3: return "vgg3";
        case Architecture::VGG16_4: return "vgg4";
        case Architecture::VGG16_5: return "vgg5";
    }
    return "?";
}

Architecture architecture_from(std::string_view name) {
    for (Architecture a : kAllArchitectures)
        if (to_string(a) == name) return a;
    throw Error(ErrorCode::ParseError, "unknown architecture '" + std::string(name) + "'");
}

bool is_convolutional(Architecture a) noexcept {
    return a == Architecture::VGG16_3 || a == Architecture::VGG16_4 || a == Architecture::VGG16_5;
}

namespace {

Network mlp(std::initializer_list<std::size_t> widths) {
    std::vector<nn::LayerSpec> layers;
    const std::vector<std::size_t> w(widths);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) layers.push_back(Network::linear(w[i], w[i + 1], Activation::ReLU));
    layers.push_back(Network::linear(w.back(), 1, Activation::Sigmoid));
    return Network(std::move(layers));
}

// conv-conv-pool blocks; the fifth block of the full net has no pool.
Network vgg(std::size_t blocks) {
    constexpr std::size_t channels[] = {4, 8, 16, 32, 64};
    std::vector<nn::LayerSpec> layers;
    std::size_t len = prep::kTargetLength, cin = 1;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t c = channels[b];
        layers.push_back(Network::conv(len, cin, c, 3, 1, Activation::ReLU));
        layers.push_back(Network::conv(len, c, c, 3, 1, Activation::ReLU));
        cin = c;
        if (b < 4) {
            layers.push_back(Network::maxpool(len, c, Activation::ReLU));
            len /= 2;
        }
    }
    const std::size_t flat = len * cin;
    layers.push_back(Network::flatten(len, cin));
    layers.push_back(Network::linear(flat, flat, Activation::ReLU));
    layers.push_back(Network::linear(flat, 1, Activation::Sigmoid));
    return Network(std::move(layers));
}

std::vector<nn::Tensor> snapshot(const nn::ParamSet& ps) {
    std::vector<nn::Tensor> out;
    for (const auto& p : ps) out.push_back(p.value);
    return out;
}

void restore(nn::ParamSet& ps, const std::vector<nn::Tensor>& values) {
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i].value = values[i];
}

}  // namespace

Network network_for(Architecture a) {
    switch (a) {
        case Architecture::LR: return Network({Network::linear(prep::kTargetLength, 1, Activation::Sigmoid)});
        case Architecture::MLP1: return mlp({150, 150, 300, 300, 150, 150, 150});
        case Architecture::MLP2: return mlp({150, 150, 150, 100, 50, 25, 10});
        case Architecture::VGG16_3: return vgg(3);
        case Architecture::VGG16_4: return vgg(4);
        case Architecture::VGG16_5: return vgg(5);
    }
    throw Error(ErrorCode::ParseError, "bad architecture");
}

DiscriminativeModel build(Architecture a, std::uint64_t seed) {
    DiscriminativeModel m;
    m.architecture = a;
    m.network = network_for(a);
    m.params = nn::init_params(m.network, seed);
    return m;
}

double forward(const DiscriminativeModel& m, std::span<const double> x) {
    if (x.size() != prep::kTargetLength)
        throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.size()) + " samples, expected 150");
    nn::Graph g(false);
    const nn::Var in = g.input(nn::Tensor::column(x));
    return g.value(m.network.forward(g, in, m.params, 0))[0];
}

int verdict(const DiscriminativeModel& m, double probability) noexcept {
    return probability >= m.decision_threshold ? 1 : 0;
}

double weighted_ce(double pred, double y, const ClassWeights& w) {
    return nn::weighted_bce_value(pred, y, w.pos, w.neg);
}

ClassWeights compute_class_weights(std::span<const double> train_values) {
    double pos = 0.0, neg = 0.0;
    for (double y : train_values) {
        pos += y;
        neg += 1.0 - y;
    }
    if (!(pos > 0.0) || !(neg > 0.0))
        throw Error(ErrorCode::SingleClassDataset, "training targets carry no " +
                                                       std::string(pos > 0.0 ? "negative" : "positive") + " mass");
    const double n = pos + neg;
    return {neg / n, pos / n};
}

ClassWeights compute_class_weights(std::span<const prep::NormalizedCycle> train) {
    std::vector<double> ys;
    ys.reserve(train.size());
    for (const auto& c : train) ys.push_back(train_value(c.label));
    return compute_class_weights(ys);
}

nn::Var loss_graph(nn::Graph& g, DiscriminativeModel& m, const nn::Tensor& x, double y, const ClassWeights& w) {
    const nn::Var in = g.constant_ref(x);
    const nn::Var p = m.network.forward(g, in, m.params, 0);
    return nn::ad::weighted_bce(g, p, y, w.pos, w.neg);
}

int compute_receptive_field(Architecture a) {
    if (!is_convolutional(a))
        throw Error(ErrorCode::NotConvolutional, std::string(to_string(a)) + " has no convolutional layers");
    const Network net = network_for(a);
    int rf = 1, jump = 1, rf_at_last_conv = 1;
    for (const auto& l : net.layers()) {
        if (l.kind == nn::LayerKind::Conv1D) {
            rf += static_cast<int>(l.width - 1) * jump;
            jump *= static_cast<int>(l.stride);
            rf_at_last_conv = rf;
        } else if (l.kind == nn::LayerKind::MaxPool1D) {
            rf += jump;
            jump *= 2;
        }
    }
    return rf_at_last_conv;
}

std::vector<double> predict(const DiscriminativeModel& m, std::span<const prep::NormalizedCycle> cycles) {
    std::vector<double> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) out.push_back(forward(m, c.values));
    return out;
}

TrainReport train(DiscriminativeModel& m, std::span<const prep::NormalizedCycle> train_set,
                  std::span<const prep::NormalizedCycle> val_set, const TrainConfig& cfg) {
    if (train_set.empty()) throw Error(ErrorCode::EmptySplit, "training set is empty");
    if (val_set.empty()) throw Error(ErrorCode::EmptySplit, "validation set is empty");
    if (cfg.batch == 0) throw Error(ErrorCode::ShapeMismatch, "batch size must be positive");

    TrainReport rep;
    rep.weights = compute_class_weights(train_set);
    const ClassWeights w = rep.weights;

    std::vector<nn::Tensor> inputs;
    inputs.reserve(train_set.size());
    for (const auto& c : train_set) {
        if (c.values.size() != prep::kTargetLength)
            throw Error(ErrorCode::ShapeMismatch, "training cycle has " + std::to_string(c.values.size()) + " samples");
        inputs.push_back(nn::Tensor::column(c.values));
    }
    std::vector<int> val_labels;
    for (const auto& c : val_set) val_labels.push_back(eval_value(c.label));
    const bool val_has_both = std::count(val_labels.begin(), val_labels.end(), 1) > 0 &&
                              std::count(val_labels.begin(), val_labels.end(), 0) > 0;

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<nn::Tensor> best = snapshot(m.params);
    double best_auc = -1.0, best_val_loss = 0.0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            m.params.zero_grad();
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = order[k];
                nn::Graph g;
                const nn::Var loss = loss_graph(g, m, inputs[i], train_value(train_set[i].label), w);
                loss_sum += g.value(loss)[0];
                g.backward(loss, scale);
            }
            nn::adam_step(m.params, cfg.lr);
        }
        rep.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

        const std::vector<double> scores = predict(m, val_set);
        double vl = 0.0;
        for (std::size_t i = 0; i < val_set.size(); ++i) vl += weighted_ce(scores[i], train_value(val_set[i].label), w);
        vl /= static_cast<double>(val_set.size());
        rep.val_loss.push_back(vl);

        bool better = false;
        if (val_has_both) {
            const double auc = eval::roc_auc(scores, val_labels).auc;
            rep.val_auc.push_back(auc);
            better = auc > best_auc;
            if (better) best_auc = auc;
        } else {
            better = rep.best_epoch == 0 || vl < best_val_loss;
            if (better) best_val_loss = vl;
        }
        if (better) {
            rep.best_epoch = epoch;
            best = snapshot(m.params);
        }
    }
    restore(m.params, best);
    return rep;
}

}  // namespace cvsqi::disc
