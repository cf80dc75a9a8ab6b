#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fsaudit/nn.hpp"

namespace fsaudit {

enum class MetricTag { mse, cossim, ssim, lpips };

MetricTag parse_metric_tag(const std::string& s);
std::string to_string(MetricTag tag);

// Mean of squared pixel differences over all channels and pixels.
double mse(const FaceImage& x, const FaceImage& y);

// Inner product over the product of norms of the flattened pixel vectors.
// A zero-norm input yields 0 (blank images occur in synthetic fixtures).
double cos_sim(const FaceImage& x, const FaceImage& y);

// Mean local SSIM over sliding Gaussian windows (11x11, sigma 1.5, valid
// positions only), channels averaged. Stabilizers C1=(0.01)^2, C2=(0.03)^2
// for a dynamic range of 1.
double ssim(const FaceImage& x, const FaceImage& y);

// Deep-feature distance backbone: pluggable so an externally trained
// extractor can replace the shipped fixed-seed convolutional stack.
class PerceptualBackbone {
public:
    virtual ~PerceptualBackbone() = default;
    virtual int image_size() const = 0;
    // Tapped activations (one tensor per tapped layer) for a batch.
    virtual std::vector<Tensor> activations(const Tensor& batch) = 0;
};

// Four conv blocks with deterministic seeded weights, tapped after each ReLU.
class SeededConvBackbone : public PerceptualBackbone {
public:
    explicit SeededConvBackbone(int image_size, std::uint64_t seed = kDefaultSeed);
    int image_size() const override { return image_size_; }
    std::vector<Tensor> activations(const Tensor& batch) override;

    static constexpr std::uint64_t kDefaultSeed = 0x5eedfacade5ce21ull;

private:
    int image_size_;
    std::vector<Sequential> blocks_;
};

// Channel-normalized squared activation differences, averaged spatially and
// across layers.
double perceptual_distance(const FaceImage& x, const FaceImage& y,
                           PerceptualBackbone& backbone);

// Dispatch on the metric tag; lpips requires a backbone.
double image_similarity(MetricTag tag, const FaceImage& x, const FaceImage& y,
                        PerceptualBackbone* backbone = nullptr);

// chi = chi_b || chi_r: q model scores plus q image-level similarities.
struct AuditFeature {
    std::vector<double> basic;
    std::vector<double> reference;  // empty in ablation mode
    MetricTag metric = MetricTag::cossim;

    std::vector<double> flat() const;
    std::size_t length() const { return basic.size() + reference.size(); }
};

AuditFeature assemble_feature(std::vector<double> basic, std::vector<double> reference,
                              MetricTag metric);

}  // namespace fsaudit
