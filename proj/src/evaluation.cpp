#include "lgan/evaluation.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "lgan/errors.hpp"
#include "lgan/numeric.hpp"

namespace lgan {

MaskSet binarize(const Tensor& g_out, std::string image_id) {
    if (g_out.rank() != 3 || g_out.size(0) != 6)
        throw ShapeError("binarize: expected [6,H,W], got " + g_out.shape_str());
    const int h = g_out.size(1), w = g_out.size(2);
    MaskSet out;
    out.image_id = std::move(image_id);
    for (int c = 0; c < 6; ++c) {
        Bitmap m(w, h, 1);
        const std::size_t base = static_cast<std::size_t>(c) * h * w;
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
            m.data[i] = g_out[base + i] >= 0.0f ? 1 : 0;
        out.masks[static_cast<std::size_t>(c)] = std::move(m);
    }
    return out;
}

double jaccard(const Bitmap& a, const Bitmap& b) {
    if (!a.same_size(b))
        throw ShapeError("jaccard: mask sizes differ (" + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool va = a.data[i] != 0, vb = b.data[i] != 0;
        inter += va && vb;
        uni += va || vb;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<MaskSet> predict_masks(const ParamStore& params, const std::vector<SamplePair>& data,
                                   const NetConfig& netcfg, const EvalOptions& opts) {
    validate_params(params, netcfg, /*require_discriminator=*/false);
    const Generator gen(netcfg);
    const RngState eval_master(opts.eval_seed);

    std::vector<MaskSet> preds;
    preds.reserve(data.size());
    for (std::size_t idx = 0; idx < data.size(); ++idx) {
        const TrainSample ts = to_model_space(data[idx]);
        Tensor x4({1, ts.x.size(0), ts.x.size(1), ts.x.size(2)});
        x4.data = ts.x.data;

        Tensor mean_out;
        RngState rng = eval_master.fork(idx);
        const int passes = std::max(1, opts.eval_samples);
        for (int k = 0; k < passes; ++k) {
            Graph g;
            const NodeId xn = g.leaf(x4);
            const BoundParams bp = bind_params(g, params, "g.");
            const NodeId out = gen.forward(g, xn, bp, rng);
            const Tensor& v = g.value(out);
            if (k == 0) {
                mean_out = v;
            } else {
                for (std::size_t i = 0; i < mean_out.numel(); ++i) mean_out[i] += v[i];
            }
        }
        if (passes > 1)
            for (auto& v : mean_out.data) v /= static_cast<float>(passes);

        Tensor flat({6, data[idx].image.height, data[idx].image.width});
        flat.data = mean_out.data;
        preds.push_back(binarize(flat, data[idx].masks.image_id));
    }
    return preds;
}

MetricsReport evaluate_predictions(const std::vector<MaskSet>& preds,
                                   const std::vector<SamplePair>& truth, const EvalOptions& opts) {
    if (preds.size() != truth.size())
        throw ShapeError("evaluate: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " ground-truth samples");

    MetricsReport report;
    report.sample_count = static_cast<int>(truth.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::array<std::vector<double>, 6> per_attr;       // per-image values in sample order
    std::array<std::uint64_t, 6> pooled_inter{}, pooled_union{};

    for (std::size_t i = 0; i < truth.size(); ++i) {
        report.sample_ids.push_back(truth[i].masks.image_id);
        std::array<double, 6> row{};
        for (int c = 0; c < 6; ++c) {
            const Bitmap& gt = truth[i].masks.masks[static_cast<std::size_t>(c)];
            const Bitmap& pr = preds[i].masks[static_cast<std::size_t>(c)];
            if (!gt.same_size(pr))
                throw ShapeError("evaluate: prediction size mismatch for sample " +
                                 truth[i].masks.image_id);
            std::uint64_t inter = 0, uni = 0;
            for (std::size_t p = 0; p < gt.data.size(); ++p) {
                const bool va = gt.data[p] != 0, vb = pr.data[p] != 0;
                inter += va && vb;
                uni += va || vb;
            }
            pooled_inter[static_cast<std::size_t>(c)] += inter;
            pooled_union[static_cast<std::size_t>(c)] += uni;
            if (uni == 0) {
                switch (opts.empty_policy) {
                    case EmptyPolicy::One:
                        row[static_cast<std::size_t>(c)] = 1.0;
                        per_attr[static_cast<std::size_t>(c)].push_back(1.0);
                        break;
                    case EmptyPolicy::Zero:
                        row[static_cast<std::size_t>(c)] = 0.0;
                        per_attr[static_cast<std::size_t>(c)].push_back(0.0);
                        break;
                    case EmptyPolicy::Skip:
                        row[static_cast<std::size_t>(c)] = nan;
                        break;
                }
            } else {
                const double j = static_cast<double>(inter) / static_cast<double>(uni);
                row[static_cast<std::size_t>(c)] = j;
                per_attr[static_cast<std::size_t>(c)].push_back(j);
            }
        }
        report.per_sample.push_back(row);
    }

    for (int c = 0; c < 6; ++c) {
        if (opts.pooled) {
            report.mean_jaccard[static_cast<std::size_t>(c)] =
                pooled_union[static_cast<std::size_t>(c)] == 0
                    ? 1.0
                    : static_cast<double>(pooled_inter[static_cast<std::size_t>(c)]) /
                          static_cast<double>(pooled_union[static_cast<std::size_t>(c)]);
        } else {
            const auto& vals = per_attr[static_cast<std::size_t>(c)];
            // All samples skipped means absence was always predicted correctly.
            report.mean_jaccard[static_cast<std::size_t>(c)] =
                vals.empty() ? 1.0 : pairwise_mean(std::span<const double>(vals));
        }
    }
    return report;
}

MetricsReport evaluate(const ParamStore& params, const std::vector<SamplePair>& data,
                       const NetConfig& netcfg, const EvalOptions& opts) {
    const std::vector<MaskSet> preds = predict_masks(params, data, netcfg, opts);
    MetricsReport report = evaluate_predictions(preds, data, opts);
    report.disc_out_channels = netcfg.disc_out_channels;
    report.config_echo["image_size"] = netcfg.image_size;
    report.config_echo["base_width"] = netcfg.base_width;
    report.config_echo["disc_out_channels"] = netcfg.disc_out_channels;
    report.config_echo["eval_seed"] = opts.eval_seed;
    report.config_echo["eval_samples"] = opts.eval_samples;
    report.config_echo["empty_policy"] =
        opts.empty_policy == EmptyPolicy::One ? "one"
        : opts.empty_policy == EmptyPolicy::Zero ? "zero" : "skip";
    report.config_echo["pooled"] = opts.pooled;
    return report;
}

void validate_params(const ParamStore& params, const NetConfig& netcfg,
                     bool require_discriminator) {
    netcfg.validate();
    ParamStore expected;
    const Generator gen(netcfg);
    gen.register_params(expected);
    if (require_discriminator) {
        const Discriminator disc(netcfg);
        disc.register_params(expected);
    }
    for (const auto& [name, tensor] : expected) {
        if (!params.contains(name))
            throw ShapeError("checkpoint is missing parameter '" + name + "' required by config");
        if (params.at(name).shape != tensor.shape)
            throw ShapeError("checkpoint parameter '" + name + "' has shape " +
                             params.at(name).shape_str() + " but config requires " +
                             tensor.shape_str());
    }
}

nlohmann::ordered_json report_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json means;
    for (int c = 0; c < 6; ++c)
        means[kAttributeKeys[static_cast<std::size_t>(c)]] =
            report.mean_jaccard[static_cast<std::size_t>(c)];
    j["mean_jaccard"] = means;
    j["sample_count"] = report.sample_count;
    j["disc_out_channels"] = report.disc_out_channels;
    j["config"] = report.config_echo;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        nlohmann::ordered_json row;
        row["id"] = report.sample_ids[i];
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (double v : report.per_sample[i]) {
            if (std::isnan(v))
                vals.push_back(nullptr);
            else
                vals.push_back(v);
        }
        row["jaccard"] = vals;
        rows.push_back(row);
    }
    j["per_sample"] = rows;
    return j;
}

void write_report_json(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report: " + path.string());
    out << report_json(report).dump(2) << "\n";
}

std::string report_table(const MetricsReport& report) {
    std::ostringstream os;
    os << "Attribute           Jaccard index\n";
    os << "------------------  -------------\n";
    for (int c = 0; c < 6; ++c) {
        char line[64];
        std::snprintf(line, sizeof(line), "%-18s  %13.4f\n", kAttributeLabels[static_cast<std::size_t>(c)],
                      report.mean_jaccard[static_cast<std::size_t>(c)]);
        os << line;
    }
    return os.str();
}

void write_image_grid(const std::vector<SamplePair>& truth, const std::vector<MaskSet>& preds,
                      const std::filesystem::path& path, int max_rows) {
    if (truth.empty() || preds.size() != truth.size())
        throw ShapeError("write_image_grid: mismatched inputs");
    const int rows = std::min<int>(max_rows, static_cast<int>(truth.size()));
    const int s = truth[0].image.width;
    const int gap = 2;
    const int cols = 5;
    Bitmap grid(cols * s + (cols - 1) * gap, rows * s + (rows - 1) * gap, 3);
    std::fill(grid.data.begin(), grid.data.end(), static_cast<std::uint8_t>(32));

    auto blit = [&](const Bitmap& src, int row, int col) {
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                for (int c = 0; c < 3; ++c)
                    grid.at(row * (s + gap) + y, col * (s + gap) + x, c) =
                        src.channels == 3 ? src.at(y, x, c) : src.at(y, x);
    };

    for (int r = 0; r < rows; ++r) {
        const auto [gt_a, gt_b] = pack(truth[static_cast<std::size_t>(r)].masks);
        const auto [pr_a, pr_b] = pack(preds[static_cast<std::size_t>(r)]);
        blit(truth[static_cast<std::size_t>(r)].image, r, 0);
        blit(gt_a, r, 1);
        blit(gt_b, r, 2);
        blit(pr_a, r, 3);
        blit(pr_b, r, 4);
    }
    write_png(path, grid);
}

} // namespace lgan
