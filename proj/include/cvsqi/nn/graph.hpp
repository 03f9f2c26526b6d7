#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cvsqi/nn/params.hpp"
#include "cvsqi/nn/tensor.hpp"

namespace cvsqi::nn {

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep over the node list is a valid topological order for backpropagation.
///
/// Parameter leaves reference the Param they were created from; their
/// gradients accumulate straight into Param::grad, which lets a minibatch be
/// processed as a sequence of per-sample graphs.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&)>;

    /// With record == false the graph only evaluates; backward() then throws
    /// GraphNotRecorded.
    explicit Graph(bool record = true) : record_(record) {}

    Var input(Tensor value);
    /// Leaf that borrows an externally owned tensor (not differentiated).
    Var constant_ref(const Tensor& value);
    Var param(Param& p);

    const Tensor& value(Var v) const;
    /// Gradient buffer for a node, allocated (zeroed) on first access.
    Tensor& grad(Var v);
    bool has_grad(Var v) const;

    bool recording() const noexcept { return record_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Records a computed node. `fn` is dropped when not recording.
    Var push(Tensor value, BackwardFn fn);

    /// Seeds d(out)/d(out) with `seed` in every component and propagates to
    /// all recorded ancestors.
    void backward(Var out, double seed = 1.0);

private:
    struct Node {
        Tensor own;
        const Tensor* ext = nullptr;
        Param* param = nullptr;
        Tensor grad;
        bool grad_live = false;
        BackwardFn backward;
    };

    Node& node(Var v);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    bool record_;
};

}  // namespace cvsqi::nn
