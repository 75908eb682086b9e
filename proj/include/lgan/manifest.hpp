#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "lgan/networks.hpp"
#include "lgan/objectives.hpp"

namespace lgan {

inline constexpr const char* kToolName = "lesiongan";
inline constexpr const char* kToolVersion = "0.1.0";

// Fully resolved run configuration, written once per run directory.
// Re-running training from a manifest reproduces the run bit-identically
// (the thread count is deliberately not part of it).
struct RunManifest {
    NetConfig net;
    TrainConfig train;
    std::string data_kind;  // "synth" or "dir"
    std::string data_path;  // for "dir"
    int synth_n = 0;        // for "synth"
    double split_ratio = 0.75;

    nlohmann::ordered_json to_json() const;
    static RunManifest from_json(const nlohmann::ordered_json& j);

    void save(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

} // namespace lgan
