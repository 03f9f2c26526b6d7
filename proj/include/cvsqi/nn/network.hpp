#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cvsqi/nn/graph.hpp"
#include "cvsqi/nn/params.hpp"

namespace cvsqi::nn {

enum class Activation { None, ReLU, Sigmoid };
enum class LayerKind { Linear, Conv1D, DeConv1D, MaxPool1D, Flatten, Reshape };

/// (length, channels). Plain vectors are (n, 1).
struct Shape {
    std::size_t length = 0;
    std::size_t channels = 1;
    std::size_t size() const noexcept { return length * channels; }
    bool operator==(const Shape&) const = default;
};

struct LayerSpec {
    LayerKind kind;
    Shape in;
    Shape out;
    std::size_t width = 0;  // kernel taps, conv layers only
    std::size_t stride = 1;
    Activation activation = Activation::None;

    bool trainable() const noexcept {
        return kind == LayerKind::Linear || kind == LayerKind::Conv1D || kind == LayerKind::DeConv1D;
    }
};

/// One row of a human-readable architecture trace, in the same terms the
/// reference tables use ("150x4", kernel "3x4", "ReLU").
struct TraceRow {
    std::string layer;
    std::string in;
    std::string out;
    std::string kernel;
    std::string activation;
    bool operator==(const TraceRow&) const = default;
};

std::string to_string(Activation a);
std::string to_string(LayerKind k);

/// Feed-forward stack. Holds only the architecture; parameters live in a
/// ParamSet with two entries (weight, bias) per trainable layer, in order.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<LayerSpec> layers);

    static LayerSpec linear(std::size_t in, std::size_t out, Activation act);
    static LayerSpec conv(std::size_t length, std::size_t c_in, std::size_t c_out, std::size_t width,
                          std::size_t stride, Activation act);
    static LayerSpec deconv(std::size_t length_in, std::size_t c_in, std::size_t c_out, std::size_t length_out,
                            Activation act);
    static LayerSpec maxpool(std::size_t length, std::size_t channels, Activation act = Activation::None);
    static LayerSpec flatten(std::size_t length, std::size_t channels);
    static LayerSpec reshape(std::size_t n, std::size_t length, std::size_t channels);

    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    Shape input_shape() const;
    Shape output_shape() const;
    std::size_t param_tensor_count() const;

    /// Appends Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))) and
    /// zero biases for every trainable layer.
    void init_params(ParamSet& params, const std::string& prefix, std::mt19937_64& rng) const;

    /// Runs the stack on the graph using params[offset ...]. The const
    /// overload reads parameters as constants (inference, no param grads).
    Var forward(Graph& g, Var x, ParamSet& params, std::size_t offset) const;
    Var forward(Graph& g, Var x, const ParamSet& params, std::size_t offset) const;

    std::vector<TraceRow> trace() const;

private:
    template <typename Params>
    Var forward_impl(Graph& g, Var x, Params& params, std::size_t offset) const;

    std::vector<LayerSpec> layers_;
};

/// Fresh parameters for a single network, deterministic in `seed`.
ParamSet init_params(const Network& net, std::uint64_t seed);

}  // namespace cvsqi::nn
