#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsaudit/extractor.hpp"
#include "fsaudit/image.hpp"
#include "fsaudit/rng.hpp"

namespace fsaudit {

// Training perturbation: per-step l2 clipping to C plus Gaussian noise with
// per-coordinate stddev C*sigma.
struct DpConfig {
    double clip_norm = 1.0;
    double noise_multiplier = 0.0;
    std::string level = "off";  // off | low | middle | high

    static DpConfig preset(const std::string& level);
};

// Input perturbation: projected gradient ascent on a surrogate extractor's
// embedding distance, bounded in l-infinity.
struct CloakConfig {
    std::string level = "low";  // low | middle | high
    double epsilon = 2.0 / 255.0;
    int steps = 40;
    double step_size = 2.0 / 2550.0;

    static CloakConfig preset(const std::string& level);
};

// Output perturbation: zero-mean Laplace noise with standard deviation delta
// on every score the model emits.
struct OutputNoiseConfig {
    double delta = 0.0;
    std::uint64_t seed = 0;
};

struct MemguardConfig {
    double margin = 1e-3;
};

double l2_norm(const std::vector<float>& v);

// Scales g to norm <= clip_norm (g / max{1, ||g||/C}). Returns the pre-clip
// norm.
double clip_gradient(std::vector<float>& g, double clip_norm);

// Adds iid Gaussian noise with stddev clip_norm * sigma to each coordinate.
void dp_noise(std::vector<float>& g, double clip_norm, double sigma, Rng& rng);

// Adds iid zero-mean Laplace noise with standard deviation delta.
std::vector<double> perturb_output(const std::vector<double>& scores,
                                   const OutputNoiseConfig& config, Rng& rng);

struct MemguardResult {
    std::vector<double> scores;
    bool skipped = false;  // tie at the argmax; vector passed through unchanged
};

// Label-preserving score perturbation: moves the target-way score as close
// to the runner-up as the margin allows (or up to max - margin when the
// target way is not the argmax), then renormalizes with softmax. The argmax
// is preserved; ties at the argmax skip perturbation.
MemguardResult memguard_perturb(const std::vector<double>& scores, int target_way,
                                double margin);

// PGD cloaking against a surrogate extractor (never the model under audit).
// Returns perturbed copies with ||x' - x||_inf <= epsilon and pixels in [0,1].
std::vector<FaceImage> cloak_images(const std::vector<FaceImage>& images,
                                    EmbeddingExtractor& surrogate,
                                    const CloakConfig& config, Rng& rng);

// Embedding displacement achieved by a cloak, for tests and reports.
double embedding_distance(EmbeddingExtractor& extractor, const FaceImage& a,
                          const FaceImage& b);

}  // namespace fsaudit
