#include "fsaudit/metrics.hpp"

#include <cmath>

#include "fsaudit/errors.hpp"

namespace fsaudit {

MetricTag parse_metric_tag(const std::string& s) {
    if (s == "mse") return MetricTag::mse;
    if (s == "cossim") return MetricTag::cossim;
    if (s == "ssim") return MetricTag::ssim;
    if (s == "lpips") return MetricTag::lpips;
    throw ConfigError("unknown metric tag '" + s + "'");
}

std::string to_string(MetricTag tag) {
    switch (tag) {
        case MetricTag::mse: return "mse";
        case MetricTag::cossim: return "cossim";
        case MetricTag::ssim: return "ssim";
        case MetricTag::lpips: return "lpips";
    }
    throw ConfigError("invalid metric tag");
}

double mse(const FaceImage& x, const FaceImage& y) {
    if (!x.same_shape(y)) throw ShapeError("mse: image shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.pixels.size(); ++i) {
        const double d = static_cast<double>(x.pixels[i]) - y.pixels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.pixels.size());
}

double cos_sim(const FaceImage& x, const FaceImage& y) {
    if (!x.same_shape(y)) throw ShapeError("cos_sim: image shapes differ");
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.pixels.size(); ++i) {
        dot += static_cast<double>(x.pixels[i]) * y.pixels[i];
        nx += static_cast<double>(x.pixels[i]) * x.pixels[i];
        ny += static_cast<double>(y.pixels[i]) * y.pixels[i];
    }
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return dot / (std::sqrt(nx) * std::sqrt(ny));
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
constexpr double kSsimC2 = 0.03 * 0.03;

std::vector<double> gaussian_kernel_1d() {
    std::vector<double> k(kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable valid-mode Gaussian filter of a single channel plane.
std::vector<double> gaussian_filter_valid(const std::vector<double>& plane, int h, int w) {
    static const std::vector<double> kernel = gaussian_kernel_1d();
    const int out_w = w - kSsimWindow + 1;
    const int out_h = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * out_w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                acc += kernel[static_cast<std::size_t>(t)] *
                       plane[static_cast<std::size_t>(y) * w + x + t];
            rows[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(out_h) * out_w, 0.0);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                acc += kernel[static_cast<std::size_t>(t)] *
                       rows[static_cast<std::size_t>(y + t) * out_w + x];
            out[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const FaceImage& x, const FaceImage& y) {
    if (!x.same_shape(y)) throw ShapeError("ssim: image shapes differ");
    if (x.height < kSsimWindow || x.width < kSsimWindow)
        throw ShapeError("ssim: image smaller than the 11x11 window");
    const int h = x.height, w = x.width;
    const std::size_t plane_sz = static_cast<std::size_t>(h) * w;

    double total = 0.0;
    for (int c = 0; c < FaceImage::kChannels; ++c) {
        std::vector<double> px(plane_sz), py(plane_sz), pxx(plane_sz), pyy(plane_sz),
            pxy(plane_sz);
        for (std::size_t i = 0; i < plane_sz; ++i) {
            const double vx = x.pixels[static_cast<std::size_t>(c) * plane_sz + i];
            const double vy = y.pixels[static_cast<std::size_t>(c) * plane_sz + i];
            px[i] = vx;
            py[i] = vy;
            pxx[i] = vx * vx;
            pyy[i] = vy * vy;
            pxy[i] = vx * vy;
        }
        const auto mu_x = gaussian_filter_valid(px, h, w);
        const auto mu_y = gaussian_filter_valid(py, h, w);
        const auto m_xx = gaussian_filter_valid(pxx, h, w);
        const auto m_yy = gaussian_filter_valid(pyy, h, w);
        const auto m_xy = gaussian_filter_valid(pxy, h, w);

        double acc = 0.0;
        for (std::size_t i = 0; i < mu_x.size(); ++i) {
            const double mx = mu_x[i], my = mu_y[i];
            const double var_x = m_xx[i] - mx * mx;
            const double var_y = m_yy[i] - my * my;
            const double cov = m_xy[i] - mx * my;
            const double num = (2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2);
            const double den = (mx * mx + my * my + kSsimC1) * (var_x + var_y + kSsimC2);
            acc += num / den;
        }
        total += acc / static_cast<double>(mu_x.size());
    }
    return total / FaceImage::kChannels;
}

// ---------------------------------------------------------------------------
// Perceptual distance
// ---------------------------------------------------------------------------

SeededConvBackbone::SeededConvBackbone(int image_size, std::uint64_t seed)
    : image_size_(image_size) {
    Rng rng(seed);
    const int widths[5] = {3, 8, 16, 32, 32};
    for (int b = 0; b < 4; ++b) {
        Sequential block;
        block.add(std::make_unique<Conv2d>(widths[b], widths[b + 1], 3, 1, 1, 1, rng,
                                           "perc" + std::to_string(b)));
        block.add(std::make_unique<Relu>());
        if (b < 3) block.add(std::make_unique<MaxPool2d>());
        blocks_.push_back(std::move(block));
    }
}

std::vector<Tensor> SeededConvBackbone::activations(const Tensor& batch) {
    std::vector<Tensor> taps;
    Tensor t = batch;
    for (auto& block : blocks_) {
        t = block.forward(t, false);
        taps.push_back(t);
    }
    return taps;
}

double perceptual_distance(const FaceImage& x, const FaceImage& y,
                           PerceptualBackbone& backbone) {
    if (!x.same_shape(y)) throw ShapeError("perceptual_distance: image shapes differ");
    std::vector<const FaceImage*> batch{&x, &y};
    const auto taps = backbone.activations(batch_images(batch, backbone.image_size()));

    double total = 0.0;
    for (const Tensor& tap : taps) {
        const std::size_t hw = static_cast<std::size_t>(tap.h) * tap.w;
        double layer_acc = 0.0;
        for (std::size_t s = 0; s < hw; ++s) {
            // unit-normalize across channels at this location, then squared diff
            double nx = 0.0, ny = 0.0;
            for (int c = 0; c < tap.c; ++c) {
                const double vx = tap.data[static_cast<std::size_t>(c) * hw + s];
                const double vy = tap.data[(static_cast<std::size_t>(tap.c + c)) * hw + s];
                nx += vx * vx;
                ny += vy * vy;
            }
            nx = std::sqrt(nx) + 1e-10;
            ny = std::sqrt(ny) + 1e-10;
            for (int c = 0; c < tap.c; ++c) {
                const double vx = tap.data[static_cast<std::size_t>(c) * hw + s] / nx;
                const double vy = tap.data[(static_cast<std::size_t>(tap.c + c)) * hw + s] / ny;
                layer_acc += (vx - vy) * (vx - vy);
            }
        }
        total += layer_acc / static_cast<double>(hw);
    }
    return total / static_cast<double>(taps.size());
}

double image_similarity(MetricTag tag, const FaceImage& x, const FaceImage& y,
                        PerceptualBackbone* backbone) {
    switch (tag) {
        case MetricTag::mse: return mse(x, y);
        case MetricTag::cossim: return cos_sim(x, y);
        case MetricTag::ssim: return ssim(x, y);
        case MetricTag::lpips:
            if (!backbone)
                throw ConfigError("lpips metric requires a perceptual backbone");
            return perceptual_distance(x, y, *backbone);
    }
    throw ConfigError("invalid metric tag");
}

std::vector<double> AuditFeature::flat() const {
    std::vector<double> out = basic;
    out.insert(out.end(), reference.begin(), reference.end());
    return out;
}

AuditFeature assemble_feature(std::vector<double> basic, std::vector<double> reference,
                              MetricTag metric) {
    if (!reference.empty() && reference.size() != basic.size())
        throw ShapeError("assemble_feature: basic and reference lengths differ");
    for (double v : basic)
        if (!std::isfinite(v)) throw NumericError("assemble_feature: non-finite basic entry");
    for (double v : reference)
        if (!std::isfinite(v))
            throw NumericError("assemble_feature: non-finite reference entry");
    AuditFeature f;
    f.basic = std::move(basic);
    f.reference = std::move(reference);
    f.metric = metric;
    return f;
}

}  // namespace fsaudit
