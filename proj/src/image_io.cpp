#include "lgan/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lgan/errors.hpp"

// The only translation unit that touches OpenCV. cv::Mat is BGR; everything
// above this layer is RGB.

namespace lgan {

namespace {

cv::Mat to_mat(const Bitmap& img) {
    cv::Mat m(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
    if (img.channels == 3) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                auto& px = m.at<cv::Vec3b>(y, x);
                px[0] = img.at(y, x, 2);
                px[1] = img.at(y, x, 1);
                px[2] = img.at(y, x, 0);
            }
    } else {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) m.at<std::uint8_t>(y, x) = img.at(y, x);
    }
    return m;
}

Bitmap from_mat(const cv::Mat& m) {
    Bitmap img(m.cols, m.rows, m.channels() == 3 ? 3 : 1);
    if (m.channels() == 3) {
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) {
                const auto& px = m.at<cv::Vec3b>(y, x);
                img.at(y, x, 0) = px[2];
                img.at(y, x, 1) = px[1];
                img.at(y, x, 2) = px[0];
            }
    } else {
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) img.at(y, x) = m.at<std::uint8_t>(y, x);
    }
    return img;
}

} // namespace

Bitmap read_image(const std::filesystem::path& path, int channels) {
    if (channels != 1 && channels != 3)
        throw ConfigError("read_image: channels must be 1 or 3");
    cv::Mat m = cv::imread(path.string(),
                           channels == 3 ? cv::IMREAD_COLOR : cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw IoError("cannot read image: " + path.string());
    return from_mat(m);
}

void write_png(const std::filesystem::path& path, const Bitmap& img) {
    if (!cv::imwrite(path.string(), to_mat(img)))
        throw IoError("cannot write PNG: " + path.string());
}

void write_jpeg(const std::filesystem::path& path, const Bitmap& img, int quality) {
    if (!cv::imwrite(path.string(), to_mat(img), {cv::IMWRITE_JPEG_QUALITY, quality}))
        throw IoError("cannot write JPEG: " + path.string());
}

Bitmap resize_bilinear(const Bitmap& img, int width, int height) {
    if (img.width == width && img.height == height) return img;
    cv::Mat out;
    cv::resize(to_mat(img), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return from_mat(out);
}

Bitmap resize_nearest(const Bitmap& img, int width, int height) {
    if (img.width == width && img.height == height) return img;
    cv::Mat out;
    cv::resize(to_mat(img), out, cv::Size(width, height), 0, 0, cv::INTER_NEAREST);
    return from_mat(out);
}

} // namespace lgan
