#include "lgan/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "lgan/errors.hpp"
#include "lgan/kernels.hpp"
#include "lgan/numeric.hpp"

namespace lgan {

namespace {

template <typename T>
kernels::ConvShape conv_shape(const TensorT<T>& in, int c_out, int kh, int kw, int stride, int pad,
                              int out_h, int out_w) {
    kernels::ConvShape s;
    s.n = in.size(0);
    s.c_in = in.size(1);
    s.h = in.size(2);
    s.w = in.size(3);
    s.c_out = c_out;
    s.kh = kh;
    s.kw = kw;
    s.stride = stride;
    s.pad = pad;
    s.out_h = out_h;
    s.out_w = out_w;
    return s;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

} // namespace

template <typename T>
std::size_t GraphT<T>::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw ShapeError("invalid node id " + std::to_string(id));
    return static_cast<std::size_t>(id);
}

template <typename T>
NodeId GraphT<T>::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

template <typename T>
const TensorT<T>& GraphT<T>::grad(NodeId id) const {
    const Node& n = nodes_[check(id)];
    if (n.grad.numel() == 0)
        throw NumericError("node " + std::to_string(id) + " has no gradient; run backward first");
    return n.grad;
}

template <typename T>
NodeId GraphT<T>::leaf(TensorT<T> v) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(v);
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::detach(NodeId a) {
    return leaf(nodes_[check(a)].value);
}

template <typename T>
NodeId GraphT<T>::conv2d(NodeId input, NodeId weight, NodeId bias, int stride, int pad) {
    const TensorT<T>& in = value(input);
    const TensorT<T>& w = value(weight);
    const TensorT<T>& b = value(bias);
    require(in.rank() == 4, "conv2d: input must be rank 4, got " + in.shape_str());
    require(w.rank() == 4, "conv2d: weight must be rank 4, got " + w.shape_str());
    require(stride >= 1, "conv2d: stride must be >= 1, got " + std::to_string(stride));
    require(pad >= 0, "conv2d: pad must be >= 0");
    require(w.size(1) == in.size(1),
            "conv2d: weight input-channel dim " + std::to_string(w.size(1)) +
                " does not match input channels " + std::to_string(in.size(1)));
    require(b.rank() == 1 && b.size(0) == w.size(0),
            "conv2d: bias shape " + b.shape_str() + " does not match filters " + std::to_string(w.size(0)));
    const int kh = w.size(2), kw = w.size(3);
    require(kh <= in.size(2) + 2 * pad,
            "conv2d: kernel height " + std::to_string(kh) + " exceeds padded input height " +
                std::to_string(in.size(2) + 2 * pad));
    require(kw <= in.size(3) + 2 * pad,
            "conv2d: kernel width " + std::to_string(kw) + " exceeds padded input width " +
                std::to_string(in.size(3) + 2 * pad));

    const int out_h = (in.size(2) + 2 * pad - kh) / stride + 1;
    const int out_w = (in.size(3) + 2 * pad - kw) / stride + 1;

    Node n;
    n.op = Op::Conv2d;
    n.inputs = {input, weight, bias};
    n.stride = stride;
    n.pad = pad;
    n.value = TensorT<T>({in.size(0), w.size(0), out_h, out_w});
    kernels::par::conv_forward(in.data.data(), w.data.data(), b.data.data(), n.value.data.data(),
                               conv_shape(in, w.size(0), kh, kw, stride, pad, out_h, out_w));
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::conv_transpose2d(NodeId input, NodeId weight, NodeId bias, int stride, int pad) {
    const TensorT<T>& in = value(input);
    const TensorT<T>& w = value(weight);
    const TensorT<T>& b = value(bias);
    require(in.rank() == 4, "conv_transpose2d: input must be rank 4, got " + in.shape_str());
    require(w.rank() == 4, "conv_transpose2d: weight must be rank 4, got " + w.shape_str());
    require(stride >= 1, "conv_transpose2d: stride must be >= 1");
    require(pad >= 0, "conv_transpose2d: pad must be >= 0");
    require(w.size(0) == in.size(1),
            "conv_transpose2d: weight input-channel dim " + std::to_string(w.size(0)) +
                " does not match input channels " + std::to_string(in.size(1)));
    require(b.rank() == 1 && b.size(0) == w.size(1),
            "conv_transpose2d: bias shape " + b.shape_str() + " does not match output channels " +
                std::to_string(w.size(1)));
    const int kh = w.size(2), kw = w.size(3);
    const int out_h = (in.size(2) - 1) * stride - 2 * pad + kh;
    const int out_w = (in.size(3) - 1) * stride - 2 * pad + kw;
    require(out_h > 0 && out_w > 0, "conv_transpose2d: non-positive output size for input " + in.shape_str());

    Node n;
    n.op = Op::ConvTranspose2d;
    n.inputs = {input, weight, bias};
    n.stride = stride;
    n.pad = pad;
    n.value = TensorT<T>({in.size(0), w.size(1), out_h, out_w});
    kernels::par::conv_transpose_forward(in.data.data(), w.data.data(), b.data.data(), n.value.data.data(),
                                         conv_shape(in, w.size(1), kh, kw, stride, pad, out_h, out_w));
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::batch_norm2d(NodeId input, NodeId gamma, NodeId beta, T eps) {
    const TensorT<T>& in = value(input);
    const TensorT<T>& g = value(gamma);
    const TensorT<T>& b = value(beta);
    require(in.rank() == 4, "batch_norm2d: input must be rank 4, got " + in.shape_str());
    const int C = in.size(1);
    require(g.rank() == 1 && g.size(0) == C, "batch_norm2d: gamma shape " + g.shape_str() +
                                                 " does not match channels " + std::to_string(C));
    require(b.rank() == 1 && b.size(0) == C, "batch_norm2d: beta shape " + b.shape_str() +
                                                 " does not match channels " + std::to_string(C));
    const long long m = static_cast<long long>(in.size(0)) * in.size(2) * in.size(3);
    require(m >= 2, "batch_norm2d: needs N*H*W >= 2 per channel, got " + std::to_string(m));

    Node n;
    n.op = Op::BatchNorm2d;
    n.inputs = {input, gamma, beta};
    n.eps = eps;
    n.value = TensorT<T>(in.shape);
    n.saved_a = TensorT<T>(in.shape); // x_hat
    n.saved_b = TensorT<T>({C});      // inv_std
    kernels::par::batchnorm_forward(in.data.data(), g.data.data(), b.data.data(), eps,
                                    in.size(0), C, in.size(2), in.size(3),
                                    n.value.data.data(), n.saved_a.data.data(), n.saved_b.data.data());
    for (int c = 0; c < C; ++c)
        if (!std::isfinite(static_cast<double>(n.saved_b[static_cast<std::size_t>(c)])))
            throw NumericError("batch_norm2d: zero variance in channel " + std::to_string(c) +
                               " with eps = 0");
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::activation(NodeId input, Act kind, T alpha) {
    if (kind == Act::LeakyRelu && !(alpha > T(0) && alpha < T(1)))
        throw ConfigError("leaky_relu: alpha must be in (0,1)");
    const TensorT<T>& in = value(input);

    Node n;
    n.op = Op::Activation;
    n.act = kind;
    n.alpha = alpha;
    n.inputs = {input};
    n.value = TensorT<T>(in.shape);
    const std::int64_t count = static_cast<std::int64_t>(in.numel());
    const T* x = in.data.data();
    T* y = n.value.data.data();
    switch (kind) {
        case Act::LeakyRelu:
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) y[i] = x[i] > T(0) ? x[i] : alpha * x[i];
            break;
        case Act::Relu:
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
            break;
        case Act::Tanh:
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) y[i] = std::tanh(x[i]);
            break;
        case Act::Sigmoid:
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
            break;
    }
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::dropout(NodeId input, float rate, RngState& rng) {
    if (!(rate >= 0.0f && rate < 1.0f))
        throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    const TensorT<T>& in = value(input);

    Node n;
    n.op = Op::Dropout;
    n.rate = rate;
    n.inputs = {input};
    n.value = TensorT<T>(in.shape);
    n.saved_a = TensorT<T>(in.shape);
    const std::int64_t count = static_cast<std::int64_t>(in.numel());
    const T keep_scale = T(1) / (T(1) - static_cast<T>(rate));
    const std::uint64_t seed = rng.seed;
    const std::uint64_t base = rng.counter;
    const T* x = in.data.data();
    T* y = n.value.data.data();
    T* mask = n.saved_a.data.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const bool keep = dropout_keep(seed, base + static_cast<std::uint64_t>(i), rate);
        mask[i] = keep ? keep_scale : T(0);
        y[i] = keep ? x[i] * keep_scale : T(0);
    }
    rng.skip(static_cast<std::uint64_t>(count));
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::concat_channels(NodeId a, NodeId b) {
    const TensorT<T>& ta = value(a);
    const TensorT<T>& tb = value(b);
    require(ta.rank() == 4 && tb.rank() == 4, "concat_channels: inputs must be rank 4");
    require(ta.size(0) == tb.size(0), "concat_channels: batch mismatch " + std::to_string(ta.size(0)) +
                                          " vs " + std::to_string(tb.size(0)));
    require(ta.size(2) == tb.size(2) && ta.size(3) == tb.size(3),
            "concat_channels: spatial mismatch " + ta.shape_str() + " vs " + tb.shape_str());

    const int N = ta.size(0), Ca = ta.size(1), Cb = tb.size(1), H = ta.size(2), W = ta.size(3);
    Node n;
    n.op = Op::ConcatChannels;
    n.inputs = {a, b};
    n.value = TensorT<T>({N, Ca + Cb, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int bn = 0; bn < N; ++bn) {
        std::copy(ta.data.begin() + static_cast<std::ptrdiff_t>(bn * Ca * plane),
                  ta.data.begin() + static_cast<std::ptrdiff_t>((bn + 1) * Ca * plane),
                  n.value.data.begin() + static_cast<std::ptrdiff_t>(bn * (Ca + Cb) * plane));
        std::copy(tb.data.begin() + static_cast<std::ptrdiff_t>(bn * Cb * plane),
                  tb.data.begin() + static_cast<std::ptrdiff_t>((bn + 1) * Cb * plane),
                  n.value.data.begin() + static_cast<std::ptrdiff_t>((bn * (Ca + Cb) + Ca) * plane));
    }
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::add(NodeId a, NodeId b) {
    const TensorT<T>& ta = value(a);
    const TensorT<T>& tb = value(b);
    require(ta.same_shape(tb), "add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.value = TensorT<T>(ta.shape);
    const std::int64_t count = static_cast<std::int64_t>(ta.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) n.value[static_cast<std::size_t>(i)] = ta[static_cast<std::size_t>(i)] + tb[static_cast<std::size_t>(i)];
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::mul(NodeId a, NodeId b) {
    const TensorT<T>& ta = value(a);
    const TensorT<T>& tb = value(b);
    require(ta.same_shape(tb), "mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Mul;
    n.inputs = {a, b};
    n.value = TensorT<T>(ta.shape);
    const std::int64_t count = static_cast<std::int64_t>(ta.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) n.value[static_cast<std::size_t>(i)] = ta[static_cast<std::size_t>(i)] * tb[static_cast<std::size_t>(i)];
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::scale(NodeId a, T factor) {
    const TensorT<T>& ta = value(a);
    Node n;
    n.op = Op::Scale;
    n.inputs = {a};
    n.alpha = factor;
    n.value = TensorT<T>(ta.shape);
    for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = factor * ta[i];
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::sum_all(NodeId a) {
    const TensorT<T>& ta = value(a);
    Node n;
    n.op = Op::SumAll;
    n.inputs = {a};
    n.value = TensorT<T>::scalar(static_cast<T>(pairwise_sum(std::span<const T>(ta.data))));
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::bce_with_logits(NodeId scores, T target) {
    const TensorT<T>& s = value(scores);
    std::vector<T> terms(s.numel());
    for (std::size_t i = 0; i < s.numel(); ++i) {
        const T v = s[i];
        terms[i] = std::max(v, T(0)) - v * target + std::log1p(std::exp(-std::abs(v)));
    }
    Node n;
    n.op = Op::BceWithLogits;
    n.inputs = {scores};
    n.alpha = target;
    n.value = TensorT<T>::scalar(static_cast<T>(pairwise_mean(std::span<const T>(terms))));
    return push(std::move(n));
}

template <typename T>
NodeId GraphT<T>::l1_loss(NodeId a, NodeId b) {
    const TensorT<T>& ta = value(a);
    const TensorT<T>& tb = value(b);
    require(ta.same_shape(tb), "l1_loss: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    std::vector<T> terms(ta.numel());
    for (std::size_t i = 0; i < ta.numel(); ++i) terms[i] = std::abs(ta[i] - tb[i]);
    Node n;
    n.op = Op::L1Loss;
    n.inputs = {a, b};
    n.value = TensorT<T>::scalar(static_cast<T>(pairwise_mean(std::span<const T>(terms))));
    return push(std::move(n));
}

template <typename T>
void GraphT<T>::backward(NodeId root) {
    const std::size_t r = check(root);
    if (nodes_[r].value.numel() != 1)
        throw NumericError("backward: root must be a scalar, got shape " + nodes_[r].value.shape_str());

    // Reachability through input edges; ids above the root cannot be reached.
    std::vector<char> reach(nodes_.size(), 0);
    std::vector<NodeId> stack = {root};
    reach[r] = 1;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        for (NodeId in : nodes_[static_cast<std::size_t>(id)].inputs) {
            if (!reach[static_cast<std::size_t>(in)]) {
                reach[static_cast<std::size_t>(in)] = 1;
                stack.push_back(in);
            }
        }
    }

    for (std::size_t i = 0; i < nodes_.size(); ++i)
        nodes_[i].grad = reach[i] ? TensorT<T>(nodes_[i].value.shape) : TensorT<T>();
    nodes_[r].grad[0] = T(1);

    for (NodeId id = root; id >= 0; --id)
        if (reach[static_cast<std::size_t>(id)] && nodes_[static_cast<std::size_t>(id)].op != Op::Leaf)
            backward_node(id);
}

template <typename T>
void GraphT<T>::backward_node(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const TensorT<T>& gout = n.grad;

    switch (n.op) {
        case Op::Leaf:
            break;

        case Op::Conv2d: {
            const TensorT<T>& in = value(n.inputs[0]);
            const TensorT<T>& w = value(n.inputs[1]);
            TensorT<T>& gin = grad_buf(n.inputs[0]);
            TensorT<T>& gw = grad_buf(n.inputs[1]);
            TensorT<T>& gb = grad_buf(n.inputs[2]);
            const int kh = w.size(2), kw = w.size(3);
            // grad-input: transposed conv of gout with the same weight buffer.
            kernels::ConvShape si = conv_shape(gout, in.size(1), kh, kw, n.stride, n.pad,
                                               in.size(2), in.size(3));
            kernels::par::conv_transpose_forward<T>(gout.data.data(), w.data.data(), nullptr,
                                                    gin.data.data(), si, true);
            kernels::ConvShape sw = conv_shape(in, w.size(0), kh, kw, n.stride, n.pad,
                                               gout.size(2), gout.size(3));
            kernels::par::conv_backward_weight(in.data.data(), gout.data.data(), gw.data.data(), sw);
            kernels::par::conv_backward_bias(gout.data.data(), gb.data.data(), gout.size(0),
                                             gout.size(1), gout.size(2), gout.size(3));
            break;
        }

        case Op::ConvTranspose2d: {
            const TensorT<T>& in = value(n.inputs[0]);
            const TensorT<T>& w = value(n.inputs[1]); // [c_in, c_out, kh, kw]
            TensorT<T>& gin = grad_buf(n.inputs[0]);
            TensorT<T>& gw = grad_buf(n.inputs[1]);
            TensorT<T>& gb = grad_buf(n.inputs[2]);
            const int kh = w.size(2), kw = w.size(3);
            // grad-input: plain conv of gout, weight read as [c_out=c_in_T, ...].
            kernels::ConvShape si = conv_shape(gout, in.size(1), kh, kw, n.stride, n.pad,
                                               in.size(2), in.size(3));
            kernels::par::conv_forward<T>(gout.data.data(), w.data.data(), nullptr,
                                          gin.data.data(), si, true);
            // grad-weight: conv_backward_weight with input/grad roles swapped
            // lands in the [c_in, c_out, kh, kw] layout directly.
            kernels::ConvShape sw = conv_shape(gout, in.size(1), kh, kw, n.stride, n.pad,
                                               in.size(2), in.size(3));
            kernels::par::conv_backward_weight(gout.data.data(), in.data.data(), gw.data.data(), sw);
            kernels::par::conv_backward_bias(gout.data.data(), gb.data.data(), gout.size(0),
                                             gout.size(1), gout.size(2), gout.size(3));
            break;
        }

        case Op::BatchNorm2d: {
            const TensorT<T>& in = value(n.inputs[0]);
            const TensorT<T>& gamma = value(n.inputs[1]);
            kernels::par::batchnorm_backward(gout.data.data(), n.saved_a.data.data(),
                                             n.saved_b.data.data(), gamma.data.data(),
                                             in.size(0), in.size(1), in.size(2), in.size(3),
                                             grad_buf(n.inputs[0]).data.data(),
                                             grad_buf(n.inputs[1]).data.data(),
                                             grad_buf(n.inputs[2]).data.data());
            break;
        }

        case Op::Activation: {
            const TensorT<T>& x = value(n.inputs[0]);
            TensorT<T>& gin = grad_buf(n.inputs[0]);
            const std::int64_t count = static_cast<std::int64_t>(x.numel());
            const T* g = gout.data.data();
            const T* xv = x.data.data();
            const T* yv = n.value.data.data();
            T* gi = gin.data.data();
            const T alpha = n.alpha;
            switch (n.act) {
                case Act::LeakyRelu:
#pragma omp parallel for schedule(static)
                    for (std::int64_t i = 0; i < count; ++i) gi[i] += g[i] * (xv[i] > T(0) ? T(1) : alpha);
                    break;
                case Act::Relu:
#pragma omp parallel for schedule(static)
                    for (std::int64_t i = 0; i < count; ++i) gi[i] += g[i] * (xv[i] > T(0) ? T(1) : T(0));
                    break;
                case Act::Tanh:
#pragma omp parallel for schedule(static)
                    for (std::int64_t i = 0; i < count; ++i) gi[i] += g[i] * (T(1) - yv[i] * yv[i]);
                    break;
                case Act::Sigmoid:
#pragma omp parallel for schedule(static)
                    for (std::int64_t i = 0; i < count; ++i) gi[i] += g[i] * yv[i] * (T(1) - yv[i]);
                    break;
            }
            break;
        }

        case Op::Dropout: {
            TensorT<T>& gin = grad_buf(n.inputs[0]);
            const std::int64_t count = static_cast<std::int64_t>(gin.numel());
            const T* g = gout.data.data();
            const T* mask = n.saved_a.data.data();
            T* gi = gin.data.data();
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) gi[i] += g[i] * mask[i];
            break;
        }

        case Op::ConcatChannels: {
            TensorT<T>& ga = grad_buf(n.inputs[0]);
            TensorT<T>& gb = grad_buf(n.inputs[1]);
            const int N = ga.size(0), Ca = ga.size(1), Cb = gb.size(1);
            const std::size_t plane = static_cast<std::size_t>(ga.size(2)) * ga.size(3);
            for (int bn = 0; bn < N; ++bn) {
                const T* src = gout.data.data() + static_cast<std::size_t>(bn) * (Ca + Cb) * plane;
                T* da = ga.data.data() + static_cast<std::size_t>(bn) * Ca * plane;
                T* db = gb.data.data() + static_cast<std::size_t>(bn) * Cb * plane;
                for (std::size_t i = 0; i < static_cast<std::size_t>(Ca) * plane; ++i) da[i] += src[i];
                for (std::size_t i = 0; i < static_cast<std::size_t>(Cb) * plane; ++i)
                    db[i] += src[static_cast<std::size_t>(Ca) * plane + i];
            }
            break;
        }

        case Op::Add: {
            TensorT<T>& ga = grad_buf(n.inputs[0]);
            TensorT<T>& gb = grad_buf(n.inputs[1]);
            for (std::size_t i = 0; i < gout.numel(); ++i) {
                ga[i] += gout[i];
                gb[i] += gout[i];
            }
            break;
        }

        case Op::Mul: {
            const TensorT<T>& a = value(n.inputs[0]);
            const TensorT<T>& b = value(n.inputs[1]);
            TensorT<T>& ga = grad_buf(n.inputs[0]);
            TensorT<T>& gb = grad_buf(n.inputs[1]);
            for (std::size_t i = 0; i < gout.numel(); ++i) {
                ga[i] += gout[i] * b[i];
                gb[i] += gout[i] * a[i];
            }
            break;
        }

        case Op::Scale: {
            TensorT<T>& ga = grad_buf(n.inputs[0]);
            for (std::size_t i = 0; i < gout.numel(); ++i) ga[i] += n.alpha * gout[i];
            break;
        }

        case Op::SumAll: {
            TensorT<T>& ga = grad_buf(n.inputs[0]);
            const T g = gout[0];
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
            break;
        }

        case Op::BceWithLogits: {
            const TensorT<T>& s = value(n.inputs[0]);
            TensorT<T>& gs = grad_buf(n.inputs[0]);
            const T g = gout[0] / static_cast<T>(s.numel());
            const T target = n.alpha;
            const std::int64_t count = static_cast<std::int64_t>(s.numel());
            const T* sv = s.data.data();
            T* gi = gs.data.data();
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < count; ++i) {
                const T sig = T(1) / (T(1) + std::exp(-sv[i]));
                gi[i] += g * (sig - target);
            }
            break;
        }

        case Op::L1Loss: {
            const TensorT<T>& a = value(n.inputs[0]);
            const TensorT<T>& b = value(n.inputs[1]);
            TensorT<T>& ga = grad_buf(n.inputs[0]);
            TensorT<T>& gb = grad_buf(n.inputs[1]);
            const T g = gout[0] / static_cast<T>(a.numel());
            for (std::size_t i = 0; i < a.numel(); ++i) {
                const T d = a[i] - b[i];
                const T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                ga[i] += g * sgn;
                gb[i] -= g * sgn;
            }
            break;
        }
    }
}

template class GraphT<float>;
template class GraphT<double>;

} // namespace lgan
