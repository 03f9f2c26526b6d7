#include "cvsqi/nn/graph.hpp"

#include <string>

#include "cvsqi/errors.hpp"

namespace cvsqi::nn {

Graph::Node& Graph::node(Var v) {
    if (v.id >= nodes_.size())
        throw Error(ErrorCode::GraphNotRecorded, "variable " + std::to_string(v.id) + " is not on this graph");
    return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
    if (v.id >= nodes_.size())
        throw Error(ErrorCode::GraphNotRecorded, "variable " + std::to_string(v.id) + " is not on this graph");
    return nodes_[v.id];
}

Var Graph::input(Tensor value) {
    Node n;
    n.own = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::constant_ref(const Tensor& value) {
    Node n;
    n.ext = &value;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::param(Param& p) {
    Node n;
    n.ext = &p.value;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const {
    const Node& n = node(v);
    return n.ext ? *n.ext : n.own;
}

Tensor& Graph::grad(Var v) {
    Node& n = node(v);
    if (n.param) return n.param->grad;
    if (!n.grad_live) {
        const Tensor& val = n.ext ? *n.ext : n.own;
        n.grad = Tensor(val.rows, val.cols);
        n.grad_live = true;
    }
    return n.grad;
}

bool Graph::has_grad(Var v) const {
    const Node& n = node(v);
    return n.param != nullptr || n.grad_live;
}

Var Graph::push(Tensor value, BackwardFn fn) {
    Node n;
    n.own = std::move(value);
    if (record_) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

void Graph::backward(Var out, double seed) {
    if (!record_) throw Error(ErrorCode::GraphNotRecorded, "graph was built in inference mode");
    if (nodes_.empty() || out.id >= nodes_.size())
        throw Error(ErrorCode::GraphNotRecorded, "output variable has no recorded forward pass");

    // Intermediate buffers restart from zero; parameter gradients keep accumulating.
    for (auto& n : nodes_) {
        n.grad_live = false;
        n.grad = Tensor();
    }
    grad(out).fill(seed);
    for (std::size_t i = out.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward && n.grad_live) n.backward(*this);
    }
}

}  // namespace cvsqi::nn
