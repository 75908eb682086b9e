#pragma once

#include <cstdint>
#include <vector>

#include "lgan/rng.hpp"
#include "lgan/tensor.hpp"

namespace lgan {

using NodeId = int;

enum class Act { LeakyRelu, Relu, Tanh, Sigmoid };

// Reverse-mode tape. Nodes are appended in execution order, so input ids are
// always smaller than the consuming node's id and backward() is a plain
// reverse sweep. Forward values are never mutated after creation; backward
// writes only the grad fields.
template <typename T>
class GraphT {
public:
    enum class Op {
        Leaf,
        Conv2d,
        ConvTranspose2d,
        BatchNorm2d,
        Activation,
        Dropout,
        ConcatChannels,
        Add,
        Mul,
        Scale,
        SumAll,
        BceWithLogits,
        L1Loss,
    };

    struct Node {
        Op op = Op::Leaf;
        std::vector<NodeId> inputs;
        TensorT<T> value;
        TensorT<T> grad; // empty until backward reaches it

        Act act = Act::Relu;
        int stride = 1, pad = 0;
        T alpha = T(0);  // leaky slope / scale factor / bce target
        T eps = T(0);    // batchnorm epsilon
        float rate = 0;  // dropout rate

        TensorT<T> saved_a; // dropout: scaled keep mask; batchnorm: x_hat
        TensorT<T> saved_b; // batchnorm: per-channel inv_std
    };

    NodeId leaf(TensorT<T> v);

    // out[n,f] = bias[f] + sum_{c,kh,kw} in[n,c,oy*s-p+kh, ox*s-p+kw] * w[f,c,kh,kw]
    NodeId conv2d(NodeId input, NodeId weight, NodeId bias, int stride, int pad);

    // weight layout [c_in, c_out, kh, kw]; exact adjoint of conv2d.
    NodeId conv_transpose2d(NodeId input, NodeId weight, NodeId bias, int stride, int pad);

    // Batch statistics over (n,h,w) in both training and inference.
    NodeId batch_norm2d(NodeId input, NodeId gamma, NodeId beta, T eps);

    NodeId activation(NodeId input, Act kind, T alpha = T(0));
    NodeId relu(NodeId x) { return activation(x, Act::Relu); }
    NodeId leaky_relu(NodeId x, T alpha) { return activation(x, Act::LeakyRelu, alpha); }
    NodeId tanh(NodeId x) { return activation(x, Act::Tanh); }
    NodeId sigmoid(NodeId x) { return activation(x, Act::Sigmoid); }

    // Elementwise zero with probability `rate`, survivors scaled by 1/(1-rate).
    // Draws are indexed off the rng counter, so the mask is independent of
    // evaluation order; consumes numel positions.
    NodeId dropout(NodeId input, float rate, RngState& rng);

    NodeId concat_channels(NodeId a, NodeId b);

    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, T factor);
    NodeId sum_all(NodeId a);

    // Mean over elements of the numerically stable form
    // max(s,0) - s*target + log1p(exp(-|s|)); target is 0 or 1.
    NodeId bce_with_logits(NodeId scores, T target);

    // Mean absolute difference.
    NodeId l1_loss(NodeId a, NodeId b);

    // Copy of the value as a fresh leaf; gradient flow stops here.
    NodeId detach(NodeId a);

    // Reverse sweep from a scalar root. Every node reachable from the root
    // receives a grad of its value's shape; contributions accumulate in
    // node-id order.
    void backward(NodeId root);

    const TensorT<T>& value(NodeId id) const { return nodes_[check(id)].value; }
    const TensorT<T>& grad(NodeId id) const;
    bool has_grad(NodeId id) const { return nodes_[check(id)].grad.numel() > 0; }
    const Node& node(NodeId id) const { return nodes_[check(id)]; }
    std::size_t size() const { return nodes_.size(); }

private:
    NodeId push(Node n);
    std::size_t check(NodeId id) const;
    void backward_node(NodeId id);
    TensorT<T>& grad_buf(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::vector<Node> nodes_;
};

using Graph = GraphT<float>;

extern template class GraphT<float>;
extern template class GraphT<double>;

} // namespace lgan
