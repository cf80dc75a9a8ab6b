#include "fsaudit/image.hpp"

#include <algorithm>
#include <cmath>

namespace fsaudit {

FaceImage make_image(int size, float fill) {
    FaceImage img;
    img.height = size;
    img.width = size;
    img.pixels.assign(static_cast<std::size_t>(FaceImage::kChannels) * size * size, fill);
    return img;
}

void validate_image(const FaceImage& img, int expected_size) {
    if (img.height <= 0 || img.width <= 0)
        throw ShapeError("image '" + img.image_id + "' has empty shape");
    if (img.pixels.size() !=
        static_cast<std::size_t>(FaceImage::kChannels) * img.height * img.width)
        throw ShapeError("image '" + img.image_id + "' pixel buffer does not match shape");
    if (expected_size >= 0 && (img.height != expected_size || img.width != expected_size))
        throw ShapeError("image '" + img.image_id + "' is " + std::to_string(img.height) +
                         "x" + std::to_string(img.width) + ", expected " +
                         std::to_string(expected_size));
    for (float v : img.pixels) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw ShapeError("image '" + img.image_id + "' has pixel outside [0,1]");
    }
}

namespace {

float sample_bilinear(const FaceImage& src, int c, double sy, double sx) {
    const int h = src.height, w = src.width;
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = sy - y0, fx = sx - x0;
    const double top = src.at(c, y0, x0) * (1.0 - fx) + src.at(c, y0, x1) * fx;
    const double bot = src.at(c, y1, x0) * (1.0 - fx) + src.at(c, y1, x1) * fx;
    return static_cast<float>(top * (1.0 - fy) + bot * fy);
}

}  // namespace

FaceImage resize_bilinear(const FaceImage& src, int out_size) {
    if (src.height == out_size && src.width == out_size) return src;
    FaceImage dst = make_image(out_size);
    dst.user_id = src.user_id;
    dst.image_id = src.image_id;
    const double sy_scale = static_cast<double>(src.height) / out_size;
    const double sx_scale = static_cast<double>(src.width) / out_size;
    for (int c = 0; c < FaceImage::kChannels; ++c) {
        for (int y = 0; y < out_size; ++y) {
            const double sy = (y + 0.5) * sy_scale - 0.5;
            for (int x = 0; x < out_size; ++x) {
                const double sx = (x + 0.5) * sx_scale - 0.5;
                dst.at(c, y, x) = sample_bilinear(src, c, sy, sx);
            }
        }
    }
    return dst;
}

FaceImage warp_affine(const FaceImage& src, double rotation, double scale,
                      double tx, double ty) {
    FaceImage dst = src;
    const double cy = (src.height - 1) * 0.5;
    const double cx = (src.width - 1) * 0.5;
    // Inverse map: destination pixel -> source location.
    const double cos_r = std::cos(-rotation) / scale;
    const double sin_r = std::sin(-rotation) / scale;
    for (int c = 0; c < FaceImage::kChannels; ++c) {
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                const double dy = y - cy - ty;
                const double dx = x - cx - tx;
                const double sy = cy + dy * cos_r - dx * sin_r;
                const double sx = cx + dy * sin_r + dx * cos_r;
                dst.at(c, y, x) = sample_bilinear(src, c, sy, sx);
            }
        }
    }
    return dst;
}

void clamp_pixels(FaceImage& img) {
    for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace fsaudit
