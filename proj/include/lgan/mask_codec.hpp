#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lgan/image_io.hpp"
#include "lgan/objectives.hpp"
#include "lgan/tensor.hpp"

namespace lgan {

// Canonical channel order. Everything keys off it: packing, checkpoints,
// evaluation rows, report columns.
inline constexpr std::array<const char*, 6> kAttributeKeys = {
    "lesion_boundary", "pigment_network", "negative_network",
    "streaks",         "milia_like_cysts", "globules",
};

// Human-readable row labels for the report table.
inline constexpr std::array<const char*, 6> kAttributeLabels = {
    "lesion boundary", "pigment network", "negative network",
    "streaks",         "milia-like cysts", "globules",
};

// Six binary masks sharing one H x W; any channel may be all-zero.
struct MaskSet {
    std::array<Bitmap, 6> masks; // single-channel, values in {0,1}
    std::string image_id;        // 7-digit ISIC identifier

    void validate() const; // throws ShapeError on violated invariants
    int width() const { return masks[0].width; }
    int height() const { return masks[0].height; }
};

struct SamplePair {
    Bitmap image; // 3-channel lesion photo
    MaskSet masks;
};

// Channels 0..2 become the RGB planes of image A, channels 3..5 of image B;
// foreground 255, background 0.
std::pair<Bitmap, Bitmap> pack(const MaskSet& masks);

// Threshold >= 128 per channel; exact inverse of pack on pack's output.
MaskSet unpack(const Bitmap& a, const Bitmap& b, std::string image_id = {});

// Deterministic split: ids sorted lexicographically, shuffled with the seed,
// first ceil(ratio*n) train.
std::pair<std::vector<std::string>, std::vector<std::string>>
split_ids(std::vector<std::string> ids, double ratio, std::uint64_t seed);

struct DatasetSplits {
    std::vector<SamplePair> train;
    std::vector<SamplePair> test;
};

// Reads root/images/ISIC_<id>.jpg plus either root/masks/ISIC_<id>_... mask
// files (ISIC 2018 naming) or the packed root/packed/{A,B} layout written by
// this tool. Photos resize bilinearly, masks nearest-neighbor. A photo with
// no mask files at all is skipped with a warning; individually missing
// attribute files become all-zero channels.
DatasetSplits load_dataset(const std::filesystem::path& root, int image_size,
                           double split_ratio = 0.75, std::uint64_t seed = 1);

// Photo bytes [0,255] -> [-1,1], mask bits {0,1} -> {-1,+1}.
TrainSample to_model_space(const SamplePair& pair);

// Inverse map; masks threshold at 0.
SamplePair from_model_space(const TrainSample& sample, std::string image_id = {});

// Synthetic desk-scale stand-in for the ISIC layout: textured skin-tone
// background, an elliptic lesion, and per-attribute sub-regions each painted
// a distinct color and present with probability 0.5.
std::vector<SamplePair> synth_samples(int n, int image_size, std::uint64_t seed);

// Same samples written to out_dir in the on-disk layout (images/ + masks/).
void synth_dataset(int n, int image_size, std::uint64_t seed,
                   const std::filesystem::path& out_dir);

} // namespace lgan
