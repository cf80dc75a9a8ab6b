#pragma once

#include <vector>

#include "fsaudit/errors.hpp"
#include "fsaudit/image.hpp"

namespace fsaudit {

// Minimal NCHW float tensor. Vectors are (N, D, 1, 1).
struct Tensor {
    std::vector<float> data;
    int n = 0, c = 0, h = 0, w = 0;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f),
          n(n_), c(c_), h(h_), w(w_) {}

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

    int chw() const { return c * h * w; }
    int hw() const { return h * w; }
    std::size_t size() const { return data.size(); }

    float* sample(int i) { return data.data() + static_cast<std::size_t>(i) * chw(); }
    const float* sample(int i) const {
        return data.data() + static_cast<std::size_t>(i) * chw();
    }

    float& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    float at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// Stacks images (which must share the expected square size) into a batch.
Tensor batch_images(const std::vector<const FaceImage*>& images, int expected_size);

}  // namespace fsaudit
