#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lgan {

// Row-major 8-bit bitmap, RGB interleaved when channels == 3.
struct Bitmap {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Bitmap() = default;
    Bitmap(int w, int h, int c)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_size(const Bitmap& o) const { return width == o.width && height == o.height; }
};

// Decoded to the requested channel count (1 = grayscale, 3 = RGB).
Bitmap read_image(const std::filesystem::path& path, int channels);

void write_png(const std::filesystem::path& path, const Bitmap& img);
void write_jpeg(const std::filesystem::path& path, const Bitmap& img, int quality = 95);

Bitmap resize_bilinear(const Bitmap& img, int width, int height);
Bitmap resize_nearest(const Bitmap& img, int width, int height);

} // namespace lgan
