#include "lgan/networks.hpp"

#include <algorithm>
#include <cmath>

#include "lgan/errors.hpp"

namespace lgan {

void NetConfig::validate() const {
    if (image_size != 32 && image_size != 64 && image_size != 128 && image_size != 256)
        throw ConfigError("image_size must be one of {32, 64, 128, 256}, got " +
                          std::to_string(image_size));
    if (disc_out_channels != 1 && disc_out_channels != 6)
        throw ConfigError("disc_out_channels must be 1 or 6, got " +
                          std::to_string(disc_out_channels));
    if (in_channels <= 0 || mask_channels <= 0 || base_width <= 0)
        throw ConfigError("channel/width settings must be positive");
}

int NetConfig::depth() const {
    int d = 0, s = image_size;
    while (s > 1) {
        s /= 2;
        ++d;
    }
    return d;
}

BoundParams bind_params(Graph& g, const ParamStore& store, const std::string& prefix) {
    BoundParams out;
    for (const auto& [name, tensor] : store)
        if (name.rfind(prefix, 0) == 0) out.emplace(name, g.leaf(tensor));
    return out;
}

namespace {

NodeId p(const BoundParams& bp, const std::string& name) {
    auto it = bp.find(name);
    if (it == bp.end()) throw ConfigError("parameter '" + name + "' not bound in graph");
    return it->second;
}

} // namespace

Generator::Generator(NetConfig cfg) : cfg_(cfg), depth_(cfg.depth()) {
    cfg_.validate();
    widths_.reserve(static_cast<std::size_t>(depth_));
    for (int i = 0; i < depth_; ++i)
        widths_.push_back(cfg_.base_width * std::min(1 << i, 8));
}

void Generator::register_params(ParamStore& store) const {
    for (int i = 1; i <= depth_; ++i) {
        const int in_ch = i == 1 ? cfg_.in_channels : widths_[static_cast<std::size_t>(i - 2)];
        const int out_ch = widths_[static_cast<std::size_t>(i - 1)];
        const std::string base = "g.enc" + std::to_string(i);
        store.add(base + ".w", Tensor({out_ch, in_ch, 4, 4}));
        store.add(base + ".b", Tensor({out_ch}));
        // No norm on the first block (reference convention) nor on the 1x1
        // bottleneck (batch statistics are degenerate there at batch 1).
        if (i != 1 && i != depth_) {
            store.add(base + ".gamma", Tensor({out_ch}));
            store.add(base + ".beta", Tensor({out_ch}));
        }
    }
    for (int i = 1; i <= depth_ - 1; ++i) {
        const int in_ch = i == 1 ? widths_[static_cast<std::size_t>(depth_ - 1)]
                                 : 2 * widths_[static_cast<std::size_t>(depth_ - i)];
        const int out_ch = widths_[static_cast<std::size_t>(depth_ - 1 - i)];
        const std::string base = "g.dec" + std::to_string(i);
        store.add(base + ".w", Tensor({in_ch, out_ch, 4, 4})); // transposed-conv layout
        store.add(base + ".b", Tensor({out_ch}));
        store.add(base + ".gamma", Tensor({out_ch}));
        store.add(base + ".beta", Tensor({out_ch}));
    }
    store.add("g.out.w", Tensor({2 * widths_[0], cfg_.mask_channels, 4, 4}));
    store.add("g.out.b", Tensor({cfg_.mask_channels}));
}

NodeId Generator::forward(Graph& g, NodeId x, const BoundParams& bp, RngState& rng) const {
    std::vector<NodeId> enc(static_cast<std::size_t>(depth_) + 1);
    enc[0] = x;
    for (int i = 1; i <= depth_; ++i) {
        const std::string base = "g.enc" + std::to_string(i);
        NodeId h = g.conv2d(enc[static_cast<std::size_t>(i - 1)], p(bp, base + ".w"),
                            p(bp, base + ".b"), 2, 1);
        if (i != 1 && i != depth_)
            h = g.batch_norm2d(h, p(bp, base + ".gamma"), p(bp, base + ".beta"), kBatchNormEps);
        enc[static_cast<std::size_t>(i)] = g.leaky_relu(h, kLeakySlope);
    }

    NodeId d = enc[static_cast<std::size_t>(depth_)];
    for (int i = 1; i <= depth_ - 1; ++i) {
        const std::string base = "g.dec" + std::to_string(i);
        NodeId h = g.conv_transpose2d(d, p(bp, base + ".w"), p(bp, base + ".b"), 2, 1);
        h = g.batch_norm2d(h, p(bp, base + ".gamma"), p(bp, base + ".beta"), kBatchNormEps);
        if (i <= 3) h = g.dropout(h, kDropoutRate, rng);
        h = g.relu(h);
        d = g.concat_channels(h, enc[static_cast<std::size_t>(depth_ - i)]);
    }
    return g.tanh(g.conv_transpose2d(d, p(bp, "g.out.w"), p(bp, "g.out.b"), 2, 1));
}

Discriminator::Discriminator(NetConfig cfg, bool use_norm) : cfg_(cfg), use_norm_(use_norm) {
    cfg_.validate();
}

void Discriminator::register_params(ParamStore& store) const {
    const int b = cfg_.base_width;
    const int pair_ch = cfg_.in_channels + cfg_.mask_channels;
    const int widths[4] = {b, 2 * b, 4 * b, 8 * b};
    for (int i = 1; i <= 4; ++i) {
        const int in_ch = i == 1 ? pair_ch : widths[i - 2];
        const std::string base = "d.block" + std::to_string(i);
        store.add(base + ".w", Tensor({widths[i - 1], in_ch, 4, 4}));
        store.add(base + ".b", Tensor({widths[i - 1]}));
        if (use_norm_ && i != 1) {
            store.add(base + ".gamma", Tensor({widths[i - 1]}));
            store.add(base + ".beta", Tensor({widths[i - 1]}));
        }
    }
    store.add("d.out.w", Tensor({cfg_.disc_out_channels, 8 * b, 4, 4}));
    store.add("d.out.b", Tensor({cfg_.disc_out_channels}));
}

NodeId Discriminator::forward(Graph& g, NodeId image, NodeId masks, const BoundParams& bp) const {
    NodeId h = g.concat_channels(image, masks);
    for (int i = 1; i <= 4; ++i) {
        const std::string base = "d.block" + std::to_string(i);
        const int stride = i <= 3 ? 2 : 1;
        h = g.conv2d(h, p(bp, base + ".w"), p(bp, base + ".b"), stride, 1);
        if (use_norm_ && i != 1)
            h = g.batch_norm2d(h, p(bp, base + ".gamma"), p(bp, base + ".beta"), kBatchNormEps);
        h = g.leaky_relu(h, kLeakySlope);
    }
    return g.conv2d(h, p(bp, "d.out.w"), p(bp, "d.out.b"), 1, 1);
}

void init_params(ParamStore& store, RngState& rng) {
    for (const std::string& name : store.names()) {
        Tensor& t = store.at(name);
        if (name.ends_with(".w")) {
            for (auto& v : t.data) v = static_cast<float>(rng.next_normal() * 0.02);
        } else if (name.ends_with(".gamma")) {
            for (auto& v : t.data) v = static_cast<float>(1.0 + rng.next_normal() * 0.02);
        } else {
            std::fill(t.data.begin(), t.data.end(), 0.0f);
        }
    }
}

} // namespace lgan
