#include "lgan/mask_codec.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "lgan/errors.hpp"
#include "lgan/rng.hpp"

namespace lgan {

namespace fs = std::filesystem;

void MaskSet::validate() const {
    const Bitmap& first = masks[0];
    for (std::size_t c = 0; c < masks.size(); ++c) {
        const Bitmap& m = masks[c];
        if (m.channels != 1)
            throw ShapeError("mask channel " + std::string(kAttributeKeys[c]) + " is not single-channel");
        if (!m.same_size(first))
            throw ShapeError("mask channel " + std::string(kAttributeKeys[c]) + " size mismatch");
        for (std::uint8_t v : m.data)
            if (v > 1)
                throw ShapeError("mask channel " + std::string(kAttributeKeys[c]) +
                                 " holds non-binary value " + std::to_string(v));
    }
}

std::pair<Bitmap, Bitmap> pack(const MaskSet& m) {
    m.validate();
    const int w = m.width(), h = m.height();
    Bitmap a(w, h, 3), b(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                a.at(y, x, c) = m.masks[static_cast<std::size_t>(c)].at(y, x) ? 255 : 0;
                b.at(y, x, c) = m.masks[static_cast<std::size_t>(c) + 3].at(y, x) ? 255 : 0;
            }
    return {std::move(a), std::move(b)};
}

MaskSet unpack(const Bitmap& a, const Bitmap& b, std::string image_id) {
    if (!a.same_size(b))
        throw ShapeError("unpack: image sizes differ (" + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
    if (a.channels != 3 || b.channels != 3)
        throw ShapeError("unpack: packed images must have 3 channels");
    MaskSet m;
    m.image_id = std::move(image_id);
    for (int c = 0; c < 6; ++c) {
        const Bitmap& src = c < 3 ? a : b;
        Bitmap mask(a.width, a.height, 1);
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x)
                mask.at(y, x) = src.at(y, x, c % 3) >= 128 ? 1 : 0;
        m.masks[static_cast<std::size_t>(c)] = std::move(mask);
    }
    return m;
}

std::pair<std::vector<std::string>, std::vector<std::string>>
split_ids(std::vector<std::string> ids, double ratio, std::uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0) throw ConfigError("split ratio must lie in [0,1]");
    std::sort(ids.begin(), ids.end());
    RngState rng = RngState(seed).fork(0x59117);
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[static_cast<std::size_t>(rng.below(i))]);
    const std::size_t n_train =
        static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(ids.size())));
    std::vector<std::string> train(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::string> test(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    return {std::move(train), std::move(test)};
}

namespace {

Bitmap binarize_mask_image(const Bitmap& gray) {
    Bitmap out(gray.width, gray.height, 1);
    for (std::size_t i = 0; i < gray.data.size(); ++i) out.data[i] = gray.data[i] >= 128 ? 1 : 0;
    return out;
}

// Mask file candidates per channel; ISIC 2018 names the boundary file
// "_segmentation" and uses the singular "milia_like_cyst".
std::vector<std::string> mask_file_candidates(const std::string& id, int channel) {
    const std::string base = "ISIC_" + id;
    if (channel == 0)
        return {base + "_attribute_lesion_boundary.png", base + "_segmentation.png"};
    if (channel == 4)
        return {base + "_attribute_milia_like_cysts.png", base + "_attribute_milia_like_cyst.png"};
    return {base + "_attribute_" + kAttributeKeys[static_cast<std::size_t>(channel)] + ".png"};
}

struct LoadedMasks {
    MaskSet masks;
    bool any_file = false;
};

LoadedMasks load_masks_for_id(const fs::path& root, const std::string& id, int image_size) {
    LoadedMasks out;
    out.masks.image_id = id;

    const fs::path masks_dir = root / "masks";
    const fs::path packed_a = root / "packed" / "A" / ("ISIC_" + id + "_packA.png");
    const fs::path packed_b = root / "packed" / "B" / ("ISIC_" + id + "_packB.png");

    bool used_masks_dir = false;
    if (fs::exists(masks_dir)) {
        for (int c = 0; c < 6; ++c) {
            bool found = false;
            for (const auto& name : mask_file_candidates(id, c)) {
                const fs::path path = masks_dir / name;
                if (fs::exists(path)) {
                    Bitmap gray = read_image(path, 1);
                    gray = resize_nearest(gray, image_size, image_size);
                    out.masks.masks[static_cast<std::size_t>(c)] = binarize_mask_image(gray);
                    found = true;
                    used_masks_dir = true;
                    break;
                }
            }
            if (!found)
                out.masks.masks[static_cast<std::size_t>(c)] = Bitmap(image_size, image_size, 1);
        }
    }
    if (used_masks_dir) {
        out.any_file = true;
        return out;
    }

    if (fs::exists(packed_a) && fs::exists(packed_b)) {
        Bitmap a = resize_nearest(read_image(packed_a, 3), image_size, image_size);
        Bitmap b = resize_nearest(read_image(packed_b, 3), image_size, image_size);
        out.masks = unpack(a, b, id);
        out.any_file = true;
        return out;
    }

    for (int c = 0; c < 6; ++c)
        out.masks.masks[static_cast<std::size_t>(c)] = Bitmap(image_size, image_size, 1);
    return out;
}

} // namespace

DatasetSplits load_dataset(const fs::path& root, int image_size, double split_ratio,
                           std::uint64_t seed) {
    const fs::path images_dir = root / "images";
    if (!fs::exists(images_dir))
        throw IoError("dataset root has no images/ directory: " + images_dir.string());

    std::map<std::string, fs::path> photos; // id -> path, sorted
    for (const auto& entry : fs::directory_iterator(images_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string stem = entry.path().stem().string();
        const std::string ext = entry.path().extension().string();
        if (ext != ".jpg" && ext != ".jpeg" && ext != ".png") continue;
        if (stem.rfind("ISIC_", 0) != 0) continue;
        photos.emplace(stem.substr(5), entry.path());
    }
    if (photos.empty()) throw IoError("no ISIC_*.jpg photos under " + images_dir.string());

    std::vector<std::string> usable_ids;
    for (const auto& [id, path] : photos) {
        // Peek for mask presence only; actual pixel loading happens below.
        const LoadedMasks probe = load_masks_for_id(root, id, 2);
        if (!probe.any_file) {
            std::cerr << "warning: skipping ISIC_" << id << " (photo without any mask files)\n";
            continue;
        }
        usable_ids.push_back(id);
    }
    if (usable_ids.empty()) throw IoError("no samples with masks under " + root.string());

    auto [train_ids, test_ids] = split_ids(usable_ids, split_ratio, seed);

    auto load_list = [&](const std::vector<std::string>& ids) {
        std::vector<SamplePair> out;
        out.reserve(ids.size());
        for (const auto& id : ids) {
            SamplePair pair;
            pair.image = resize_bilinear(read_image(photos.at(id), 3), image_size, image_size);
            pair.masks = load_masks_for_id(root, id, image_size).masks;
            out.push_back(std::move(pair));
        }
        return out;
    };

    DatasetSplits splits;
    splits.train = load_list(train_ids);
    splits.test = load_list(test_ids);
    return splits;
}

TrainSample to_model_space(const SamplePair& pair) {
    const int h = pair.image.height, w = pair.image.width;
    TrainSample out;
    out.x = Tensor({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.x[static_cast<std::size_t>((c * h + y) * w + x)] =
                    static_cast<float>(pair.image.at(y, x, c)) / 127.5f - 1.0f;
    out.y = Tensor({6, h, w});
    for (int c = 0; c < 6; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.y[static_cast<std::size_t>((c * h + y) * w + x)] =
                    pair.masks.masks[static_cast<std::size_t>(c)].at(y, x) ? 1.0f : -1.0f;
    return out;
}

SamplePair from_model_space(const TrainSample& sample, std::string image_id) {
    const int h = sample.x.size(1), w = sample.x.size(2);
    SamplePair out;
    out.image = Bitmap(w, h, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float v = (sample.x[static_cast<std::size_t>((c * h + y) * w + x)] + 1.0f) * 127.5f;
                out.image.at(y, x, c) =
                    static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
            }
    out.masks.image_id = std::move(image_id);
    for (int c = 0; c < 6; ++c) {
        Bitmap m(w, h, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                m.at(y, x) = sample.y[static_cast<std::size_t>((c * h + y) * w + x)] >= 0.0f ? 1 : 0;
        out.masks.masks[static_cast<std::size_t>(c)] = std::move(m);
    }
    return out;
}

namespace {

struct Palette {
    std::array<std::uint8_t, 3> background, lesion, negative, pigment, streaks, globules, milia;
};

std::uint8_t jitter(int base, double amount) {
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(base + amount)), 0, 255));
}

// One lesion: rotated ellipse boundary plus attribute sub-regions placed in
// disjoint radial bands so the color cue per region stays unambiguous.
SamplePair synth_one(int image_size, RngState rng) {
    const double S = image_size;
    const double cx = S * (0.44 + 0.12 * rng.next_double());
    const double cy = S * (0.44 + 0.12 * rng.next_double());
    const double rx = S * (0.24 + 0.14 * rng.next_double());
    const double ry = S * (0.24 + 0.14 * rng.next_double());
    const double theta = 3.141592653589793 * rng.next_double();
    const double ct = std::cos(theta), st = std::sin(theta);

    const bool present_pigment = rng.next_float() < 0.5f;
    const bool present_negative = rng.next_float() < 0.5f;
    const bool present_streaks = rng.next_float() < 0.5f;
    const bool present_milia = rng.next_float() < 0.5f;
    const bool present_globules = rng.next_float() < 0.5f;

    // Streak wedge, negative-patch direction, dot/blob placements. Radial
    // bands keep overlap low; where regions do overlap, a fixed paint order
    // decides the photo color.
    const double streak_phi = 6.283185307179586 * rng.next_double();
    const double streak_span = 1.7 + 1.1 * rng.next_double();
    const double neg_phi = 6.283185307179586 * rng.next_double();

    const int n_milia = 3 + static_cast<int>(rng.below(2));
    std::vector<std::array<double, 2>> milia_pos;
    for (int i = 0; i < n_milia; ++i) {
        const double phi = 6.283185307179586 * rng.next_double();
        const double rad = 0.64 + 0.08 * rng.next_double();
        milia_pos.push_back({rad, phi});
    }
    const int n_glob = 2 + static_cast<int>(rng.below(2));
    std::vector<std::array<double, 2>> glob_pos;
    for (int i = 0; i < n_glob; ++i) {
        const double phi = 6.283185307179586 * rng.next_double();
        const double rad = 0.18 * rng.next_double();
        glob_pos.push_back({rad, phi});
    }
    const double milia_r = std::max(3.0, S / 16.0);
    const double glob_r = std::max(4.0, S / 14.0);

    Palette pal;
    const double pj = 10.0 * (rng.next_double() - 0.5);
    pal.background = {jitter(206, pj), jitter(176, pj), jitter(152, pj)};
    pal.lesion = {jitter(152, pj), jitter(102, pj), jitter(76, pj)};
    pal.negative = {jitter(236, pj), jitter(226, pj), jitter(212, pj)};
    pal.pigment = {jitter(88, pj), jitter(54, pj), jitter(34, pj)};
    pal.streaks = {jitter(42, pj), jitter(62, pj), jitter(122, pj)};
    pal.globules = {jitter(58, pj), jitter(112, pj), jitter(58, pj)};
    pal.milia = {jitter(250, pj), jitter(248, pj), jitter(120, pj)};

    SamplePair out;
    out.masks.image_id.clear();
    for (int c = 0; c < 6; ++c)
        out.masks.masks[static_cast<std::size_t>(c)] = Bitmap(image_size, image_size, 1);
    out.image = Bitmap(image_size, image_size, 3);

    const RngState noise = rng.fork(0x4015E);
    for (int y = 0; y < image_size; ++y) {
        for (int x = 0; x < image_size; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double xr = dx * ct + dy * st;
            const double yr = -dx * st + dy * ct;
            const double r2 = (xr / rx) * (xr / rx) + (yr / ry) * (yr / ry);
            const double r = std::sqrt(r2);
            const bool inside = r2 <= 1.0;

            bool m_pigment = false, m_negative = false, m_streaks = false;
            bool m_milia = false, m_globules = false;
            if (inside) {
                const double ang = std::atan2(yr, xr);
                if (present_pigment && r >= 0.34 && r <= 0.62) m_pigment = true;
                if (present_streaks && r >= 0.76 && r <= 1.0) {
                    double rel = ang - streak_phi;
                    while (rel < 0) rel += 6.283185307179586;
                    if (rel <= streak_span) m_streaks = true;
                }
                if (present_negative) {
                    const double ex = xr / rx, ey = yr / ry;
                    const double ddx = ex - 0.45 * std::cos(neg_phi);
                    const double ddy = ey - 0.45 * std::sin(neg_phi);
                    if (ddx * ddx + ddy * ddy <= 0.26 * 0.26) m_negative = true;
                }
                if (present_milia) {
                    for (const auto& mp : milia_pos) {
                        const double mx = cx + mp[0] * rx * std::cos(mp[1]) * ct -
                                          mp[0] * ry * std::sin(mp[1]) * st;
                        const double my = cy + mp[0] * rx * std::cos(mp[1]) * st +
                                          mp[0] * ry * std::sin(mp[1]) * ct;
                        const double qx = x - mx, qy = y - my;
                        if (qx * qx + qy * qy <= milia_r * milia_r) {
                            m_milia = true;
                            break;
                        }
                    }
                }
                if (present_globules) {
                    for (const auto& gp : glob_pos) {
                        const double gx = cx + gp[0] * rx * std::cos(gp[1]) * ct -
                                          gp[0] * ry * std::sin(gp[1]) * st;
                        const double gy = cy + gp[0] * rx * std::cos(gp[1]) * st +
                                          gp[0] * ry * std::sin(gp[1]) * ct;
                        const double qx = x - gx, qy = y - gy;
                        if (qx * qx + qy * qy <= glob_r * glob_r) {
                            m_globules = true;
                            break;
                        }
                    }
                }
            }

            out.masks.masks[0].at(y, x) = inside ? 1 : 0;
            out.masks.masks[1].at(y, x) = m_pigment ? 1 : 0;
            out.masks.masks[2].at(y, x) = m_negative ? 1 : 0;
            out.masks.masks[3].at(y, x) = m_streaks ? 1 : 0;
            out.masks.masks[4].at(y, x) = m_milia ? 1 : 0;
            out.masks.masks[5].at(y, x) = m_globules ? 1 : 0;

            // Topmost region wins the photo color.
            const std::array<std::uint8_t, 3>* color = &pal.background;
            if (inside) color = &pal.lesion;
            if (m_pigment) color = &pal.pigment;
            if (m_streaks) color = &pal.streaks;
            if (m_negative) color = &pal.negative;
            if (m_globules) color = &pal.globules;
            if (m_milia) color = &pal.milia;

            const std::size_t pix = (static_cast<std::size_t>(y) * image_size + x) * 3;
            for (int c = 0; c < 3; ++c) {
                const double amp = inside ? 6.0 : 10.0;
                const double nz =
                    amp * (static_cast<double>(noise.at(pix + static_cast<std::size_t>(c)) >> 40) *
                               0x1.0p-24 -
                           0.5);
                out.image.data[pix + static_cast<std::size_t>(c)] = jitter((*color)[c], nz);
            }
        }
    }
    return out;
}

} // namespace

std::vector<SamplePair> synth_samples(int n, int image_size, std::uint64_t seed) {
    if (n < 1) throw ConfigError("synth_samples: n must be >= 1");
    std::vector<SamplePair> out;
    out.reserve(static_cast<std::size_t>(n));
    const RngState master(seed);
    for (int i = 0; i < n; ++i) {
        SamplePair pair = synth_one(image_size, master.fork(1000 + static_cast<std::uint64_t>(i)));
        char id[8];
        std::snprintf(id, sizeof(id), "%07d", i + 1);
        pair.masks.image_id = id;
        out.push_back(std::move(pair));
    }
    return out;
}

void synth_dataset(int n, int image_size, std::uint64_t seed, const fs::path& out_dir) {
    const std::vector<SamplePair> samples = synth_samples(n, image_size, seed);
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "masks");
    for (const auto& pair : samples) {
        const std::string base = "ISIC_" + pair.masks.image_id;
        write_jpeg(out_dir / "images" / (base + ".jpg"), pair.image);
        for (int c = 0; c < 6; ++c) {
            Bitmap gray(pair.masks.width(), pair.masks.height(), 1);
            for (std::size_t i = 0; i < gray.data.size(); ++i)
                gray.data[i] = pair.masks.masks[static_cast<std::size_t>(c)].data[i] ? 255 : 0;
            const std::string name = c == 0 ? base + "_segmentation.png"
                                            : base + "_attribute_" + kAttributeKeys[static_cast<std::size_t>(c)] +
                                                  ".png";
            write_png(out_dir / "masks" / name, gray);
        }
    }
}

} // namespace lgan
