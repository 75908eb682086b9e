#pragma once

#include <map>
#include <string>
#include <vector>

#include "lgan/graph.hpp"
#include "lgan/params.hpp"
#include "lgan/rng.hpp"

namespace lgan {

struct NetConfig {
    int image_size = 256;
    int in_channels = 3;
    int mask_channels = 6;
    int base_width = 64;
    int disc_out_channels = 1;

    void validate() const; // throws ConfigError
    int depth() const;     // log2(image_size): encoder stages down to a 1x1 bottleneck
};

// Parameter leaves inserted into a graph for one phase of a step.
using BoundParams = std::map<std::string, NodeId>;

BoundParams bind_params(Graph& g, const ParamStore& store, const std::string& prefix);

// U-Net: stride-2 4x4 convs halve the spatial dims down to 1x1, mirrored by
// stride-2 4x4 transposed convs with channel-wise skip concatenation.
// Dropout 0.5 in the first three decoder blocks supplies the model's noise z
// and stays active at prediction time. Final head is tanh over mask_channels.
class Generator {
public:
    explicit Generator(NetConfig cfg);
    void register_params(ParamStore& store) const;
    NodeId forward(Graph& g, NodeId x, const BoundParams& p, RngState& rng) const;

    int depth() const { return depth_; }
    const std::vector<int>& encoder_widths() const { return widths_; }

private:
    NetConfig cfg_;
    int depth_;
    std::vector<int> widths_;
};

// PatchGAN over the 9-channel (image, mask-stack) pair: three stride-2
// blocks at base*{1,2,4}, one stride-1 block at base*8, then a final conv to
// disc_out_channels. Raw scores; the sigmoid lives inside the loss. Yields a
// 30x30 map at image_size 256.
class Discriminator {
public:
    explicit Discriminator(NetConfig cfg, bool use_norm = true);
    void register_params(ParamStore& store) const;
    NodeId forward(Graph& g, NodeId image, NodeId masks, const BoundParams& p) const;

private:
    NetConfig cfg_;
    bool use_norm_;
};

// Conv weights ~ N(0, 0.02), norm gamma ~ N(1, 0.02), biases and beta zero.
// Draws happen in lexicographic parameter order from the given stream.
void init_params(ParamStore& store, RngState& rng);

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kLeakySlope = 0.2f;
inline constexpr float kDropoutRate = 0.5f;

} // namespace lgan
