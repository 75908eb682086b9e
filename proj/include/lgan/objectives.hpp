#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lgan/graph.hpp"
#include "lgan/networks.hpp"
#include "lgan/params.hpp"

namespace lgan {

struct TrainConfig {
    float lambda_l1 = 100.0f;
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float adam_eps = 1e-8f;
    int epochs = 100;
    int batch_size = 1;
    std::uint64_t seed = 1;
    float disc_loss_weight = 0.5f;
    int checkpoint_every = 0; // additionally save every k epochs when > 0

    void validate() const;
};

struct AdamState {
    std::vector<std::string> names; // lexicographic, fixed at init
    std::map<std::string, Tensor> m, v;
    std::int64_t t = 0;

    static AdamState init(const ParamStore& store, const std::string& prefix);
};

// Mean BCE over raw scores against a constant 0/1 label.
NodeId bce_with_logits(Graph& g, NodeId scores, float target);

// 0.5 * (bce(d_real, 1) + bce(d_fake, 0)); minimized when real scores grow
// and fake scores shrink.
NodeId loss_discriminator(Graph& g, NodeId d_real, NodeId d_fake, float weight = 0.5f);

struct GeneratorLoss {
    NodeId total, adv, l1;
};

// Non-saturating adversarial term bce(d_fake, 1) plus lambda * mean|y - G|.
GeneratorLoss loss_generator(Graph& g, NodeId d_fake, NodeId g_out, NodeId target_masks,
                             float lambda_l1);

using GradMap = std::map<std::string, const Tensor*>;

GradMap collect_grads(const Graph& g, const BoundParams& bound);

// Bias-corrected Adam over the state's parameter set, in lexicographic
// order; t advances by exactly one.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, const TrainConfig& cfg);

struct TrainSample {
    Tensor x; // [3,H,W] in [-1,1]
    Tensor y; // [6,H,W] in {-1,+1}
};

struct StepReport {
    float loss_d = 0;
    float loss_g_total = 0;
    float loss_g_adv = 0;
    float loss_g_l1 = 0;
};

// One alternating update: forward G once, step D on (x,y) vs (x, detached
// fake), then step G through the freshly updated D. D gradients in the G
// step are computed but never applied.
StepReport train_step(const Tensor& x, const Tensor& y, const Generator& gen,
                      const Discriminator& disc, ParamStore& params, AdamState& adam_g,
                      AdamState& adam_d, const TrainConfig& cfg, RngState& dropout_rng);

struct EpochMetrics {
    int epoch = 0;
    double loss_d = 0, loss_g_adv = 0, loss_g_l1 = 0, loss_g_total = 0;
};

struct TrainResult {
    ParamStore params;
    std::vector<EpochMetrics> metrics;
};

// Full run: seeded shuffle per epoch, epochs * ceil(n/batch) steps, epoch
// means appended to <run_dir>/metrics.jsonl and the final checkpoint written
// to <run_dir>/checkpoint.ckpt (plus periodic copies when configured).
// Pass an empty run_dir to keep everything in memory.
TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const NetConfig& netcfg, const std::filesystem::path& run_dir = {});

// [N,...] batch from consecutive samples; used by train and the evaluators.
Tensor stack_batch(const std::vector<const Tensor*>& items);

} // namespace lgan
