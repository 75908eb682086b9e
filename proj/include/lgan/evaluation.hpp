#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgan/mask_codec.hpp"
#include "lgan/networks.hpp"
#include "lgan/params.hpp"
#include "lgan/tensor.hpp"

namespace lgan {

// Tanh-space output [6,H,W] -> binary masks; >= 0 counts as foreground
// (the boundary value 0 is assigned to foreground).
MaskSet binarize(const Tensor& g_out, std::string image_id = {});

// |a AND b| / |a OR b|. Both masks empty scores 1.0 (a correct prediction of
// absence); exactly one empty scores 0.0.
double jaccard(const Bitmap& a, const Bitmap& b);

// Aggregation rule for the both-empty case.
enum class EmptyPolicy { One, Zero, Skip };

struct EvalOptions {
    std::uint64_t eval_seed = 1; // dropout stream for prediction passes
    int eval_samples = 1;        // stochastic forward passes averaged per sample
    EmptyPolicy empty_policy = EmptyPolicy::One;
    bool pooled = false; // aggregate intersection/union instead of per-image means
};

struct MetricsReport {
    std::array<double, 6> mean_jaccard{};     // canonical attribute order
    std::vector<std::string> sample_ids;
    std::vector<std::array<double, 6>> per_sample; // NaN marks a skipped cell
    int sample_count = 0;
    int disc_out_channels = 0;
    nlohmann::ordered_json config_echo;
};

// Generator predictions for every sample, dropout active, seeded per sample
// from eval_seed so the result is reproducible and order-independent.
std::vector<MaskSet> predict_masks(const ParamStore& params, const std::vector<SamplePair>& data,
                                   const NetConfig& netcfg, const EvalOptions& opts);

// Score arbitrary predictions against ground truth. evaluate() runs the
// generator and feeds this, which also lets tests score an identity
// "generator" directly.
MetricsReport evaluate_predictions(const std::vector<MaskSet>& preds,
                                   const std::vector<SamplePair>& truth, const EvalOptions& opts);

MetricsReport evaluate(const ParamStore& params, const std::vector<SamplePair>& data,
                       const NetConfig& netcfg, const EvalOptions& opts);

// Shape agreement between a loaded checkpoint and a config; throws ShapeError.
void validate_params(const ParamStore& params, const NetConfig& netcfg,
                     bool require_discriminator = true);

nlohmann::ordered_json report_json(const MetricsReport& report);
void write_report_json(const MetricsReport& report, const std::filesystem::path& path);

// Aligned two-column table in the shape of the paper's result tables.
std::string report_table(const MetricsReport& report);

// Side-by-side grid (photo | truth packs | predicted packs), one row per
// sample, capped at max_rows.
void write_image_grid(const std::vector<SamplePair>& truth, const std::vector<MaskSet>& preds,
                      const std::filesystem::path& path, int max_rows = 8);

} // namespace lgan
