#include "fsaudit/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsaudit/errors.hpp"

namespace fsaudit {

DpConfig DpConfig::preset(const std::string& level) {
    DpConfig cfg;
    cfg.level = level;
    cfg.clip_norm = 1.0;
    if (level == "off")
        cfg.noise_multiplier = 0.0;
    else if (level == "low")
        cfg.noise_multiplier = 0.5;
    else if (level == "middle")
        cfg.noise_multiplier = 1.0;
    else if (level == "high")
        cfg.noise_multiplier = 2.0;
    else
        throw ConfigError("unknown dp level '" + level + "'");
    return cfg;
}

CloakConfig CloakConfig::preset(const std::string& level) {
    CloakConfig cfg;
    cfg.level = level;
    if (level == "low")
        cfg.epsilon = 2.0 / 255.0;
    else if (level == "middle")
        cfg.epsilon = 4.0 / 255.0;
    else if (level == "high")
        cfg.epsilon = 8.0 / 255.0;
    else
        throw ConfigError("unknown cloak level '" + level + "'");
    cfg.steps = 40;
    cfg.step_size = cfg.epsilon / 10.0;
    return cfg;
}

double l2_norm(const std::vector<float>& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    return std::sqrt(sq);
}

double clip_gradient(std::vector<float>& g, double clip_norm) {
    const double norm = l2_norm(g);
    if (norm > clip_norm && norm > 0.0) {
        const float scale = static_cast<float>(clip_norm / norm);
        for (float& x : g) x *= scale;
    }
    return norm;
}

void dp_noise(std::vector<float>& g, double clip_norm, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    const double stddev = clip_norm * sigma;
    for (float& x : g) x += static_cast<float>(stddev * rng.normal());
}

std::vector<double> perturb_output(const std::vector<double>& scores,
                                   const OutputNoiseConfig& config, Rng& rng) {
    std::vector<double> out = scores;
    if (config.delta <= 0.0) return out;
    const double scale = config.delta / std::sqrt(2.0);  // Laplace stddev = b*sqrt(2)
    for (double& s : out) s += rng.laplace(scale);
    return out;
}

namespace {

std::vector<double> softmax(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

}  // namespace

MemguardResult memguard_perturb(const std::vector<double>& scores, int target_way,
                                double margin) {
    if (scores.size() < 2) throw ConfigError("memguard_perturb: need at least 2 ways");
    if (target_way < 0 || target_way >= static_cast<int>(scores.size()))
        throw ConfigError("memguard_perturb: target way out of range");

    MemguardResult result;
    int argmax = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[static_cast<std::size_t>(argmax)])
            argmax = static_cast<int>(i);
    int tie_count = 0;
    for (double s : scores)
        if (s == scores[static_cast<std::size_t>(argmax)]) ++tie_count;
    if (tie_count > 1) {
        result.scores = softmax(scores);
        result.skipped = true;
        return result;
    }

    std::vector<double> perturbed = scores;
    if (target_way == argmax) {
        double second = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (static_cast<int>(i) != argmax) second = std::max(second, scores[i]);
        perturbed[static_cast<std::size_t>(target_way)] = second + margin;
    } else {
        perturbed[static_cast<std::size_t>(target_way)] =
            scores[static_cast<std::size_t>(argmax)] - margin;
    }
    result.scores = softmax(perturbed);
    return result;
}

std::vector<FaceImage> cloak_images(const std::vector<FaceImage>& images,
                                    EmbeddingExtractor& surrogate,
                                    const CloakConfig& config, Rng& rng) {
    if (!(config.epsilon > 0.0 && config.epsilon < 1.0))
        throw ConfigError("cloak epsilon must be in (0,1)");
    std::vector<FaceImage> out;
    out.reserve(images.size());
    const int size = surrogate.config().image_size;

    for (const FaceImage& original : images) {
        if (original.height != size || original.width != size)
            throw ShapeError("cloak_images: image size does not match the surrogate");
        std::vector<const FaceImage*> single{&original};
        const Tensor x0 = batch_images(single, size);
        Tensor e0 = surrogate.embed(x0, false);

        // Random start inside the budget; the gradient at the original is zero.
        Tensor x = x0;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            x.data[i] += static_cast<float>(rng.uniform(-config.epsilon, config.epsilon));
            x.data[i] = std::clamp(x.data[i],
                                   std::max(0.0f, x0.data[i] - static_cast<float>(config.epsilon)),
                                   std::min(1.0f, x0.data[i] + static_cast<float>(config.epsilon)));
        }

        auto distance_sq = [&](const Tensor& emb) {
            double d = 0.0;
            for (std::size_t i = 0; i < emb.data.size(); ++i) {
                const double diff = emb.data[i] - e0.data[i];
                d += diff * diff;
            }
            return d;
        };

        Tensor emb = surrogate.embed(x, false);
        const double start_distance = distance_sq(emb);
        for (int step = 0; step < config.steps; ++step) {
            // maximize ||E(x) - E(x0)||^2: dL/de = 2(e - e0)
            Tensor ge = Tensor::zeros_like(emb);
            for (std::size_t i = 0; i < emb.data.size(); ++i)
                ge.data[i] = 2.0f * (emb.data[i] - e0.data[i]);
            Tensor gfeat = surrogate.backward_embedding(ge);
            Tensor gx = surrogate.backward_features(gfeat);
            for (float v : gx.data)
                if (!std::isfinite(v))
                    throw NumericError("cloak_images: non-finite input gradient");
            for (std::size_t i = 0; i < x.data.size(); ++i) {
                const float dir = gx.data[i] > 0.0f ? 1.0f : (gx.data[i] < 0.0f ? -1.0f : 0.0f);
                float v = x.data[i] + static_cast<float>(config.step_size) * dir;
                v = std::clamp(v, x0.data[i] - static_cast<float>(config.epsilon),
                               x0.data[i] + static_cast<float>(config.epsilon));
                x.data[i] = std::clamp(v, 0.0f, 1.0f);
            }
            emb = surrogate.embed(x, false);
        }
        if (!(distance_sq(emb) > start_distance))
            throw NumericError("cloak_images: embedding distance did not increase for '" +
                               original.image_id + "'");

        FaceImage cloaked = original;
        std::copy(x.data.begin(), x.data.end(), cloaked.pixels.begin());
        out.push_back(std::move(cloaked));
    }
    return out;
}

double embedding_distance(EmbeddingExtractor& extractor, const FaceImage& a,
                          const FaceImage& b) {
    std::vector<const FaceImage*> batch{&a, &b};
    const Tensor emb = extractor.embed(batch_images(batch, extractor.config().image_size),
                                       false);
    double d = 0.0;
    const int dim = emb.c;
    for (int i = 0; i < dim; ++i) {
        const double diff = emb.data[static_cast<std::size_t>(i)] -
                            emb.data[static_cast<std::size_t>(dim + i)];
        d += diff * diff;
    }
    return std::sqrt(d);
}

}  // namespace fsaudit
