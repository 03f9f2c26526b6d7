#include "cvsqi/nn/network.hpp"

#include <cmath>
#include <type_traits>

#include "cvsqi/errors.hpp"
#include "cvsqi/nn/ops.hpp"

namespace cvsqi::nn {

namespace {

std::string dims(const Shape& s, bool as_vector) {
    if (as_vector) return std::to_string(s.size());
    return std::to_string(s.length) + "x" + std::to_string(s.channels);
}

Var activate(Graph& g, Var v, Activation a) {
    switch (a) {
        case Activation::ReLU: return ad::relu(g, v);
        case Activation::Sigmoid: return ad::sigmoid(g, v);
        case Activation::None: break;
    }
    return v;
}

}  // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "ReLU";
        case Activation::Sigmoid: return "Sigmoid";
        case Activation::None: break;
    }
    return "-";
}

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Linear: return "Linear";
        case LayerKind::Conv1D: return "Conv1D";
        case LayerKind::DeConv1D: return "DeConv1D";
        case LayerKind::MaxPool1D: return "MaxPool1D";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Reshape: return "Reshape";
    }
    return "?";
}

Network::Network(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        if (layers_[i].in.size() != layers_[i - 1].out.size())
            throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " input does not match previous output");
    }
}

LayerSpec Network::linear(std::size_t in, std::size_t out, Activation act) {
    return LayerSpec{LayerKind::Linear, {in, 1}, {out, 1}, 0, 1, act};
}

LayerSpec Network::conv(std::size_t length, std::size_t c_in, std::size_t c_out, std::size_t width,
                        std::size_t stride, Activation act) {
    return LayerSpec{LayerKind::Conv1D, {length, c_in}, {conv_output_length(length, width, stride), c_out},
                     width, stride, act};
}

LayerSpec Network::deconv(std::size_t length_in, std::size_t c_in, std::size_t c_out, std::size_t length_out,
                          Activation act) {
    if (conv_output_length(length_out, 3, 2) != length_in)
        throw Error(ErrorCode::ShapeMismatch, "deconv cannot map " + std::to_string(length_in) + " onto " +
                                                  std::to_string(length_out));
    return LayerSpec{LayerKind::DeConv1D, {length_in, c_in}, {length_out, c_out}, 3, 2, act};
}

LayerSpec Network::maxpool(std::size_t length, std::size_t channels, Activation act) {
    return LayerSpec{LayerKind::MaxPool1D, {length, channels}, {length / 2, channels}, 2, 2, act};
}

LayerSpec Network::flatten(std::size_t length, std::size_t channels) {
    return LayerSpec{LayerKind::Flatten, {length, channels}, {length * channels, 1}, 0, 1, Activation::None};
}

LayerSpec Network::reshape(std::size_t n, std::size_t length, std::size_t channels) {
    return LayerSpec{LayerKind::Reshape, {n, 1}, {length, channels}, 0, 1, Activation::None};
}

Shape Network::input_shape() const { return layers_.empty() ? Shape{} : layers_.front().in; }
Shape Network::output_shape() const { return layers_.empty() ? Shape{} : layers_.back().out; }

std::size_t Network::param_tensor_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_)
        if (l.trainable()) n += 2;
    return n;
}

void Network::init_params(ParamSet& params, const std::string& prefix, std::mt19937_64& rng) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        if (!l.trainable()) continue;
        std::size_t rows = 0, cols = 0, fan_in = 0, fan_out = 0;
        if (l.kind == LayerKind::Linear) {
            rows = l.out.size();
            cols = l.in.size();
            fan_in = cols;
            fan_out = rows;
        } else {
            rows = l.width * l.in.channels;
            cols = l.out.channels;
            fan_in = l.width * l.in.channels;
            fan_out = l.width * l.out.channels;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Tensor W(rows, cols);
        for (double& w : W.data) w = dist(rng);
        const std::string base = prefix + std::to_string(i) + "." + to_string(l.kind);
        params.add(base + ".W", std::move(W));
        params.add(base + ".b", Tensor(l.kind == LayerKind::Linear ? rows : cols, 1));
    }
}

template <typename Params>
Var Network::forward_impl(Graph& g, Var x, Params& params, std::size_t offset) const {
    auto leaf = [&](std::size_t i) {
        if constexpr (std::is_const_v<Params>)
            return g.constant_ref(params[i].value);
        else
            return g.param(params[i]);
    };
    Var h = x;
    std::size_t p = offset;
    for (const auto& l : layers_) {
        switch (l.kind) {
            case LayerKind::Linear: {
                const Var W = leaf(p);
                const Var b = leaf(p + 1);
                p += 2;
                h = ad::dense(g, h, W, b);
                break;
            }
            case LayerKind::Conv1D: {
                const Var K = leaf(p);
                const Var b = leaf(p + 1);
                p += 2;
                h = ad::conv1d(g, h, K, b, l.width, l.stride);
                break;
            }
            case LayerKind::DeConv1D: {
                const Var K = leaf(p);
                const Var b = leaf(p + 1);
                p += 2;
                h = ad::conv_transpose1d(g, h, K, b, l.width, l.stride, l.out.length);
                break;
            }
            case LayerKind::MaxPool1D: h = ad::maxpool1d(g, h); break;
            case LayerKind::Flatten:
            case LayerKind::Reshape: h = ad::reshape(g, h, l.out.length, l.out.channels); break;
        }
        // Pooling after a ReLU stage is already nonnegative; the tables still
        // list ReLU there, so it is applied only where it changes something.
        if (l.kind != LayerKind::MaxPool1D) h = activate(g, h, l.activation);
    }
    return h;
}

Var Network::forward(Graph& g, Var x, ParamSet& params, std::size_t offset) const {
    return forward_impl(g, x, params, offset);
}

Var Network::forward(Graph& g, Var x, const ParamSet& params, std::size_t offset) const {
    return forward_impl(g, x, params, offset);
}

std::vector<TraceRow> Network::trace() const {
    std::vector<TraceRow> rows;
    rows.reserve(layers_.size());
    for (const auto& l : layers_) {
        const bool vec = l.kind == LayerKind::Linear;
        TraceRow r;
        r.layer = to_string(l.kind);
        r.in = l.kind == LayerKind::Reshape ? dims(l.in, true) : dims(l.in, vec);
        r.out = l.kind == LayerKind::Flatten ? dims(l.out, true) : dims(l.out, vec);
        switch (l.kind) {
            case LayerKind::Conv1D:
            case LayerKind::DeConv1D:
                r.kernel = std::to_string(l.width) + "x" + std::to_string(l.out.channels);
                break;
            case LayerKind::MaxPool1D: r.kernel = "2"; break;
            default: r.kernel = "-"; break;
        }
        r.activation = to_string(l.activation);
        rows.push_back(std::move(r));
    }
    return rows;
}

ParamSet init_params(const Network& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ParamSet ps;
    net.init_params(ps, "", rng);
    return ps;
}

}  // namespace cvsqi::nn
