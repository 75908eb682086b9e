#include "lgan/manifest.hpp"

#include <fstream>

#include "lgan/errors.hpp"

namespace lgan {

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["net"] = {{"image_size", net.image_size},
                {"in_channels", net.in_channels},
                {"mask_channels", net.mask_channels},
                {"base_width", net.base_width},
                {"disc_out_channels", net.disc_out_channels}};
    j["train"] = {{"lambda_l1", train.lambda_l1},
                  {"lr", train.lr},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"adam_eps", train.adam_eps},
                  {"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"seed", train.seed},
                  {"disc_loss_weight", train.disc_loss_weight},
                  {"checkpoint_every", train.checkpoint_every}};
    j["data"] = {{"kind", data_kind},
                 {"path", data_path},
                 {"synth_n", synth_n},
                 {"split_ratio", split_ratio}};
    return j;
}

RunManifest RunManifest::from_json(const nlohmann::ordered_json& j) {
    RunManifest m;
    try {
        const auto& n = j.at("net");
        m.net.image_size = n.at("image_size").get<int>();
        m.net.in_channels = n.at("in_channels").get<int>();
        m.net.mask_channels = n.at("mask_channels").get<int>();
        m.net.base_width = n.at("base_width").get<int>();
        m.net.disc_out_channels = n.at("disc_out_channels").get<int>();
        const auto& t = j.at("train");
        m.train.lambda_l1 = t.at("lambda_l1").get<float>();
        m.train.lr = t.at("lr").get<float>();
        m.train.beta1 = t.at("beta1").get<float>();
        m.train.beta2 = t.at("beta2").get<float>();
        m.train.adam_eps = t.at("adam_eps").get<float>();
        m.train.epochs = t.at("epochs").get<int>();
        m.train.batch_size = t.at("batch_size").get<int>();
        m.train.seed = t.at("seed").get<std::uint64_t>();
        m.train.disc_loss_weight = t.at("disc_loss_weight").get<float>();
        m.train.checkpoint_every = t.at("checkpoint_every").get<int>();
        const auto& d = j.at("data");
        m.data_kind = d.at("kind").get<std::string>();
        m.data_path = d.at("path").get<std::string>();
        m.synth_n = d.at("synth_n").get<int>();
        m.split_ratio = d.at("split_ratio").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    if (m.data_kind != "synth" && m.data_kind != "dir")
        throw ConfigError("manifest data.kind must be 'synth' or 'dir'");
    return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << to_json().dump(2) << "\n";
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest: " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest is not valid JSON: " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

} // namespace lgan
