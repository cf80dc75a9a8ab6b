#pragma once

#include <string>
#include <vector>

#include "fsaudit/errors.hpp"

namespace fsaudit {

// RGB image in CHW layout, pixel values in [0,1].
struct FaceImage {
    std::vector<float> pixels;  // size = 3 * height * width
    int height = 0;
    int width = 0;
    std::string user_id;
    std::string image_id;

    static constexpr int kChannels = 3;

    float& at(int c, int y, int x) {
        return pixels[static_cast<std::size_t>((c * height + y) * width + x)];
    }
    float at(int c, int y, int x) const {
        return pixels[static_cast<std::size_t>((c * height + y) * width + x)];
    }
    std::size_t pixel_count() const { return pixels.size(); }

    bool same_shape(const FaceImage& other) const {
        return height == other.height && width == other.width;
    }
};

FaceImage make_image(int size, float fill = 0.0f);

// Checks the FaceImage invariants (shape, [0,1] range, finite values).
void validate_image(const FaceImage& img, int expected_size = -1);

// Bilinear resize (half-pixel centers, edge clamp).
FaceImage resize_bilinear(const FaceImage& src, int out_size);

// Inverse-mapped affine warp about the image center: rotation (radians),
// isotropic scale, translation in pixels. Bilinear sampling, edge clamp.
FaceImage warp_affine(const FaceImage& src, double rotation, double scale,
                      double tx, double ty);

void clamp_pixels(FaceImage& img);

struct IdentityRecord {
    std::string user_id;
    std::vector<FaceImage> images;
};

}  // namespace fsaudit
