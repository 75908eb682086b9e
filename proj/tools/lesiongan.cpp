// lesiongan: conditional-GAN lesion-attribute segmentation at desk scale.
//
// Subcommands: train, eval, predict, pack, unpack, gradcheck, synth.
// Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric, 5 integrity.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgan/errors.hpp"
#include "lgan/evaluation.hpp"
#include "lgan/gradcheck.hpp"
#include "lgan/manifest.hpp"
#include "lgan/mask_codec.hpp"
#include "lgan/networks.hpp"
#include "lgan/objectives.hpp"
#include "lgan/params.hpp"
#include "lgan/threads.hpp"

namespace fs = std::filesystem;
using namespace lgan;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIntegrity = 5;

struct DataFlags {
    std::string data_dir;
    int synth_n = 0;
    double split = 0.75;
    int image_size = 256;
    std::uint64_t seed = 1;
};

DatasetSplits load_splits(const DataFlags& d) {
    if (d.synth_n > 0) {
        const std::vector<SamplePair> all = synth_samples(d.synth_n, d.image_size, d.seed);
        std::vector<std::string> ids;
        for (const auto& s : all) ids.push_back(s.masks.image_id);
        auto [train_ids, test_ids] = split_ids(ids, d.split, d.seed);
        DatasetSplits out;
        for (const auto& id : train_ids)
            for (const auto& s : all)
                if (s.masks.image_id == id) out.train.push_back(s);
        for (const auto& id : test_ids)
            for (const auto& s : all)
                if (s.masks.image_id == id) out.test.push_back(s);
        return out;
    }
    return load_dataset(d.data_dir, d.image_size, d.split, d.seed);
}

std::vector<TrainSample> to_model_list(const std::vector<SamplePair>& pairs) {
    std::vector<TrainSample> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(to_model_space(p));
    return out;
}

// disc_out_channels, image_size and base_width are recoverable from the
// parameter shapes; flags only need to agree when given.
NetConfig infer_netconfig(const ParamStore& params) {
    NetConfig cfg;
    if (!params.contains("g.enc1.w"))
        throw IntegrityError("checkpoint holds no generator parameters");
    const Tensor& enc1 = params.at("g.enc1.w");
    cfg.base_width = enc1.size(0);
    cfg.in_channels = enc1.size(1);
    cfg.mask_channels = params.at("g.out.w").size(1);
    int depth = 0;
    while (params.contains("g.enc" + std::to_string(depth + 1) + ".w")) ++depth;
    cfg.image_size = 1 << depth;
    cfg.disc_out_channels = params.contains("d.out.w") ? params.at("d.out.w").size(0) : 1;
    return cfg;
}

int run_train(const RunManifest& manifest, const fs::path& out_dir, bool force) {
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
        throw IoError("output directory exists and is not empty (use --force): " +
                      out_dir.string());
    fs::create_directories(out_dir);

    DataFlags d;
    d.data_dir = manifest.data_path;
    d.synth_n = manifest.data_kind == "synth" ? manifest.synth_n : 0;
    d.split = manifest.split_ratio;
    d.image_size = manifest.net.image_size;
    d.seed = manifest.train.seed;
    const DatasetSplits splits = load_splits(d);
    std::cout << "dataset: " << splits.train.size() << " train / " << splits.test.size()
              << " test samples\n";

    manifest.save(out_dir / "manifest.json");
    const TrainResult result =
        train(to_model_list(splits.train), manifest.train, manifest.net, out_dir);
    std::cout << "wrote " << (out_dir / "checkpoint.ckpt").string() << "\n";
    if (!result.metrics.empty()) {
        const auto& last = result.metrics.back();
        std::cout << "final epoch " << last.epoch << ": loss_d=" << last.loss_d
                  << " loss_g_total=" << last.loss_g_total << " loss_g_l1=" << last.loss_g_l1
                  << "\n";
    }
    return 0;
}

int cmd_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train the generator/discriminator pair");
    auto flags = std::make_shared<DataFlags>();
    auto manifest = std::make_shared<RunManifest>();
    auto out_dir = std::make_shared<std::string>("run");
    auto manifest_path = std::make_shared<std::string>();
    auto preset = std::make_shared<std::string>();
    auto threads = std::make_shared<int>(0);
    auto force = std::make_shared<bool>(false);

    cmd->add_option("--data-dir", flags->data_dir, "dataset root (images/ + masks/ or packed/)");
    cmd->add_option("--synth", flags->synth_n, "use n synthetic samples instead of a dataset");
    cmd->add_option("--image-size", flags->image_size, "one of 32/64/128/256")
        ->default_val(256);
    cmd->add_option("--disc-channels", manifest->net.disc_out_channels,
                    "discriminator output channels")
        ->check(CLI::IsMember({1, 6}))
        ->default_val(1);
    cmd->add_option("--base-width", manifest->net.base_width, "first encoder width")
        ->default_val(64);
    cmd->add_option("--epochs", manifest->train.epochs)->default_val(100);
    cmd->add_option("--batch-size", manifest->train.batch_size)->default_val(1);
    cmd->add_option("--lambda-l1", manifest->train.lambda_l1)->default_val(100.0f);
    cmd->add_option("--lr", manifest->train.lr)->default_val(2e-4f);
    cmd->add_option("--beta1", manifest->train.beta1)->default_val(0.5f);
    cmd->add_option("--beta2", manifest->train.beta2)->default_val(0.999f);
    cmd->add_option("--disc-loss-weight", manifest->train.disc_loss_weight)->default_val(0.5f);
    cmd->add_option("--seed", flags->seed)->default_val(1);
    cmd->add_option("--split", flags->split, "train fraction")->default_val(0.75);
    cmd->add_option("--checkpoint-every", manifest->train.checkpoint_every,
                    "also checkpoint every k epochs");
    cmd->add_option("--preset", *preset, "exp1 (1-channel D) or exp2 (6-channel D)")
        ->check(CLI::IsMember({"exp1", "exp2"}));
    cmd->add_option("--manifest", *manifest_path, "replay a saved manifest (overrides flags)");
    cmd->add_option("--out", *out_dir, "run directory")->default_val("run");
    cmd->add_option("--threads", *threads, "kernel threads (0 = hardware)");
    cmd->add_flag("--force", *force, "allow writing into a non-empty run directory");

    cmd->callback([=]() {
        set_threads(*threads);
        RunManifest m;
        if (!manifest_path->empty()) {
            m = RunManifest::load(*manifest_path);
        } else {
            if (flags->synth_n > 0 && !flags->data_dir.empty())
                throw ConfigError("--synth and --data-dir are mutually exclusive");
            if (flags->synth_n <= 0 && flags->data_dir.empty())
                throw ConfigError("one of --synth or --data-dir is required");
            if (*preset == "exp1") manifest->net.disc_out_channels = 1;
            if (*preset == "exp2") manifest->net.disc_out_channels = 6;
            m = *manifest;
            m.net.image_size = flags->image_size;
            m.train.seed = flags->seed;
            m.data_kind = flags->synth_n > 0 ? "synth" : "dir";
            m.data_path = flags->data_dir;
            m.synth_n = flags->synth_n;
            m.split_ratio = flags->split;
            m.net.validate();
            m.train.validate();
        }
        std::exit(run_train(m, *out_dir, *force));
    });
    return 0;
}

int cmd_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "evaluate a checkpoint (per-attribute Jaccard)");
    auto flags = std::make_shared<DataFlags>();
    auto checkpoint = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>("eval");
    auto manifest_path = std::make_shared<std::string>();
    auto on = std::make_shared<std::string>("test");
    auto opts = std::make_shared<EvalOptions>();
    auto policy = std::make_shared<std::string>("one");
    auto grid = std::make_shared<bool>(false);
    auto threads = std::make_shared<int>(0);

    cmd->add_option("--checkpoint", *checkpoint, "checkpoint file")->required();
    cmd->add_option("--data-dir", flags->data_dir);
    cmd->add_option("--synth", flags->synth_n);
    cmd->add_option("--manifest", *manifest_path, "take dataset settings from a run manifest");
    cmd->add_option("--image-size", flags->image_size)->default_val(256);
    cmd->add_option("--split", flags->split)->default_val(0.75);
    cmd->add_option("--seed", flags->seed, "dataset/split seed")->default_val(1);
    cmd->add_option("--on", *on, "which split to score")->check(CLI::IsMember({"train", "test"}));
    cmd->add_option("--eval-seed", opts->eval_seed)->default_val(1);
    cmd->add_option("--eval-samples", opts->eval_samples, "stochastic passes to average")
        ->default_val(1);
    cmd->add_option("--empty-policy", *policy, "both-empty scoring")
        ->check(CLI::IsMember({"one", "zero", "skip"}));
    cmd->add_flag("--pooled", opts->pooled, "pool intersections/unions across samples");
    cmd->add_flag("--grid", *grid, "also write a side-by-side PNG grid");
    cmd->add_option("--out", *out_dir, "report directory")->default_val("eval");
    cmd->add_option("--threads", *threads);

    cmd->callback([=]() {
        set_threads(*threads);
        if (!manifest_path->empty()) {
            const RunManifest m = RunManifest::load(*manifest_path);
            flags->data_dir = m.data_path;
            flags->synth_n = m.data_kind == "synth" ? m.synth_n : 0;
            flags->split = m.split_ratio;
            flags->image_size = m.net.image_size;
            flags->seed = m.train.seed;
        }
        if (flags->synth_n <= 0 && flags->data_dir.empty())
            throw ConfigError("one of --synth, --data-dir or --manifest is required");

        const ParamStore params = ParamStore::load(*checkpoint);
        const NetConfig netcfg = infer_netconfig(params);
        flags->image_size = netcfg.image_size;
        validate_params(params, netcfg, /*require_discriminator=*/false);

        if (*policy == "zero") opts->empty_policy = EmptyPolicy::Zero;
        if (*policy == "skip") opts->empty_policy = EmptyPolicy::Skip;

        const DatasetSplits splits = load_splits(*flags);
        const std::vector<SamplePair>& data = *on == "train" ? splits.train : splits.test;
        if (data.empty()) throw ConfigError("selected split is empty");

        const std::vector<MaskSet> preds = predict_masks(params, data, netcfg, *opts);
        MetricsReport report = evaluate_predictions(preds, data, *opts);
        report.disc_out_channels = netcfg.disc_out_channels;
        report.config_echo["checkpoint"] = *checkpoint;
        report.config_echo["image_size"] = netcfg.image_size;
        report.config_echo["disc_out_channels"] = netcfg.disc_out_channels;
        report.config_echo["split"] = *on;
        report.config_echo["eval_seed"] = opts->eval_seed;
        report.config_echo["eval_samples"] = opts->eval_samples;
        report.config_echo["empty_policy"] = *policy;
        report.config_echo["pooled"] = opts->pooled;

        fs::create_directories(*out_dir);
        write_report_json(report, fs::path(*out_dir) / "report.json");
        std::ofstream table(fs::path(*out_dir) / "report.txt");
        table << report_table(report);
        if (*grid) write_image_grid(data, preds, fs::path(*out_dir) / "grid.png");
        std::cout << report_table(report);
        std::exit(0);
    });
    return 0;
}

int cmd_predict(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "run the generator on one lesion photo");
    auto checkpoint = std::make_shared<std::string>();
    auto image = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>("prediction");
    auto eval_seed = std::make_shared<std::uint64_t>(1);
    auto threads = std::make_shared<int>(0);

    cmd->add_option("--checkpoint", *checkpoint)->required();
    cmd->add_option("--image", *image, "lesion photo (jpg/png)")->required();
    cmd->add_option("--out", *out_dir)->default_val("prediction");
    cmd->add_option("--eval-seed", *eval_seed)->default_val(1);
    cmd->add_option("--threads", *threads);

    cmd->callback([=]() {
        set_threads(*threads);
        const ParamStore params = ParamStore::load(*checkpoint);
        const NetConfig netcfg = infer_netconfig(params);
        validate_params(params, netcfg, /*require_discriminator=*/false);

        SamplePair pair;
        pair.image = resize_bilinear(read_image(*image, 3), netcfg.image_size, netcfg.image_size);
        for (auto& m : pair.masks.masks) m = Bitmap(netcfg.image_size, netcfg.image_size, 1);
        pair.masks.image_id = fs::path(*image).stem().string();

        EvalOptions opts;
        opts.eval_seed = *eval_seed;
        const std::vector<MaskSet> preds = predict_masks(params, {pair}, netcfg, opts);
        const auto [a, b] = pack(preds[0]);
        fs::create_directories(*out_dir);
        write_png(fs::path(*out_dir) / (pair.masks.image_id + "_packA.png"), a);
        write_png(fs::path(*out_dir) / (pair.masks.image_id + "_packB.png"), b);
        std::cout << "wrote " << (fs::path(*out_dir) / (pair.masks.image_id + "_packA.png")).string()
                  << " and _packB.png\n";
        std::exit(0);
    });
    return 0;
}

// Shared by pack/unpack: collect ISIC_<id> mask groups under a directory.
std::vector<std::string> collect_ids(const fs::path& dir, const std::string& suffix) {
    std::vector<std::string> ids;
    if (!fs::exists(dir)) throw IoError("no such directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string stem = entry.path().stem().string();
        if (stem.rfind("ISIC_", 0) != 0) continue;
        const auto pos = stem.find(suffix);
        if (pos == std::string::npos) continue;
        ids.push_back(stem.substr(5, stem.find('_', 5) - 5));
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

int cmd_pack(CLI::App& app) {
    auto* cmd = app.add_subcommand("pack", "pack per-attribute masks into two 3-channel PNGs");
    auto in_dir = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    cmd->add_option("--masks-dir", *in_dir, "directory of ISIC_<id>_... mask PNGs")->required();
    cmd->add_option("--out", *out_dir, "output root (packed/A and packed/B)")->required();

    cmd->callback([=]() {
        // Reuse the dataset mask loader per id at native resolution.
        const std::vector<std::string> ids = collect_ids(*in_dir, "_");
        if (ids.empty()) throw IoError("no ISIC_* mask files under " + *in_dir);
        fs::create_directories(fs::path(*out_dir) / "A");
        fs::create_directories(fs::path(*out_dir) / "B");
        int failures = 0;
        for (const auto& id : ids) {
            try {
                // Native size: read the first existing file to size the set.
                MaskSet m;
                m.image_id = id;
                int w = -1, h = -1;
                std::array<Bitmap, 6> grays;
                for (int c = 0; c < 6; ++c) {
                    const std::vector<std::string> names =
                        c == 0 ? std::vector<std::string>{"ISIC_" + id + "_attribute_lesion_boundary.png",
                                                          "ISIC_" + id + "_segmentation.png"}
                        : c == 4
                            ? std::vector<std::string>{"ISIC_" + id + "_attribute_milia_like_cysts.png",
                                                       "ISIC_" + id + "_attribute_milia_like_cyst.png"}
                            : std::vector<std::string>{"ISIC_" + id + "_attribute_" +
                                                       kAttributeKeys[static_cast<std::size_t>(c)] +
                                                       ".png"};
                    for (const auto& name : names) {
                        if (fs::exists(fs::path(*in_dir) / name)) {
                            grays[static_cast<std::size_t>(c)] = read_image(fs::path(*in_dir) / name, 1);
                            w = grays[static_cast<std::size_t>(c)].width;
                            h = grays[static_cast<std::size_t>(c)].height;
                            break;
                        }
                    }
                }
                if (w < 0) throw IoError("no mask files for ISIC_" + id);
                for (int c = 0; c < 6; ++c) {
                    Bitmap& gray = grays[static_cast<std::size_t>(c)];
                    Bitmap mask(w, h, 1);
                    if (gray.width == 0) {
                        std::cerr << "warning: ISIC_" << id << " missing "
                                  << kAttributeKeys[static_cast<std::size_t>(c)]
                                  << ", using all-zero channel\n";
                    } else {
                        if (!gray.same_size(mask)) gray = resize_nearest(gray, w, h);
                        for (std::size_t i = 0; i < mask.data.size(); ++i)
                            mask.data[i] = gray.data[i] >= 128 ? 1 : 0;
                    }
                    m.masks[static_cast<std::size_t>(c)] = std::move(mask);
                }
                const auto [a, b] = pack(m);
                write_png(fs::path(*out_dir) / "A" / ("ISIC_" + id + "_packA.png"), a);
                write_png(fs::path(*out_dir) / "B" / ("ISIC_" + id + "_packB.png"), b);
            } catch (const std::exception& e) {
                std::cerr << "error packing ISIC_" << id << ": " << e.what() << "\n";
                ++failures;
            }
        }
        std::cout << "packed " << (ids.size() - static_cast<std::size_t>(failures)) << " of "
                  << ids.size() << " mask sets\n";
        std::exit(failures == 0 ? 0 : kExitIo);
    });
    return 0;
}

int cmd_unpack(CLI::App& app) {
    auto* cmd = app.add_subcommand("unpack", "split packed PNG pairs back into mask files");
    auto in_dir = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    cmd->add_option("--packed-dir", *in_dir, "root holding A/ and B/")->required();
    cmd->add_option("--out", *out_dir, "directory for per-attribute PNGs")->required();

    cmd->callback([=]() {
        const fs::path a_dir = fs::path(*in_dir) / "A";
        const fs::path b_dir = fs::path(*in_dir) / "B";
        const std::vector<std::string> ids = collect_ids(a_dir, "_packA");
        if (ids.empty()) throw IoError("no ISIC_*_packA.png under " + a_dir.string());
        fs::create_directories(*out_dir);
        int failures = 0;
        for (const auto& id : ids) {
            try {
                const Bitmap a = read_image(a_dir / ("ISIC_" + id + "_packA.png"), 3);
                const Bitmap b = read_image(b_dir / ("ISIC_" + id + "_packB.png"), 3);
                const MaskSet m = unpack(a, b, id);
                for (int c = 0; c < 6; ++c) {
                    Bitmap gray(m.width(), m.height(), 1);
                    for (std::size_t i = 0; i < gray.data.size(); ++i)
                        gray.data[i] = m.masks[static_cast<std::size_t>(c)].data[i] ? 255 : 0;
                    const std::string name =
                        c == 0 ? "ISIC_" + id + "_segmentation.png"
                               : "ISIC_" + id + "_attribute_" +
                                     kAttributeKeys[static_cast<std::size_t>(c)] + ".png";
                    write_png(fs::path(*out_dir) / name, gray);
                }
            } catch (const std::exception& e) {
                std::cerr << "error unpacking ISIC_" << id << ": " << e.what() << "\n";
                ++failures;
            }
        }
        std::cout << "unpacked " << (ids.size() - static_cast<std::size_t>(failures)) << " of "
                  << ids.size() << " mask sets\n";
        std::exit(failures == 0 ? 0 : kExitIo);
    });
    return 0;
}

int cmd_gradcheck(CLI::App& app) {
    auto* cmd = app.add_subcommand("gradcheck", "finite-difference checks for every operation");
    auto ops = std::make_shared<std::vector<std::string>>();
    auto all = std::make_shared<bool>(false);
    auto mutate = std::make_shared<bool>(false);
    cmd->add_option("--op", *ops, "suite name(s); see --list");
    cmd->add_flag("--all", *all, "run every suite");
    auto list = std::make_shared<bool>(false);
    cmd->add_flag("--list", *list, "print suite names and exit");
    cmd->add_flag("--mutate-grad", *mutate,
                  "test fixture: corrupt analytic gradients to prove detection")
        ->group(""); // hidden

    cmd->callback([=]() {
        if (*list) {
            for (const auto& name : gradcheck_op_names()) std::cout << name << "\n";
            std::exit(0);
        }
        if (!*all && ops->empty())
            throw ConfigError("pass --all or at least one --op (see --list)");
        const auto results = run_gradchecks(*all ? std::vector<std::string>{} : *ops, *mutate);
        std::cout << gradcheck_table(results);
        for (const auto& r : results)
            if (!r.pass) std::exit(kExitNumeric);
        std::exit(0);
    });
    return 0;
}

int cmd_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "write a synthetic dataset in the ISIC layout");
    auto n = std::make_shared<int>(16);
    auto image_size = std::make_shared<int>(64);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out_dir = std::make_shared<std::string>();
    cmd->add_option("--n", *n, "sample count")->default_val(16);
    cmd->add_option("--image-size", *image_size)->default_val(64);
    cmd->add_option("--seed", *seed)->default_val(1);
    cmd->add_option("--out", *out_dir)->required();

    cmd->callback([=]() {
        synth_dataset(*n, *image_size, *seed, *out_dir);
        std::cout << "wrote " << *n << " samples under " << *out_dir << "\n";
        std::exit(0);
    });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional-GAN segmentation of skin-lesion attribute masks"};
    app.require_subcommand(1);

    cmd_train(app);
    cmd_eval(app);
    cmd_predict(app);
    cmd_pack(app);
    cmd_unpack(app);
    cmd_gradcheck(app);
    cmd_synth(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIntegrity;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
