#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "fsaudit/nn.hpp"

namespace fsaudit {

enum class ExtractorTag {
    simple_cnn,
    mobilenet_like,
    resnet18_like,
    resnet50_like,
    googlenet_like,
};

ExtractorTag parse_extractor_tag(const std::string& s);
std::string to_string(ExtractorTag tag);

enum class EmbedHead { global_avg, flatten_linear };

struct ExtractorConfig {
    ExtractorTag tag = ExtractorTag::simple_cnn;
    int channels = 64;
    int image_size = 96;
    bool batch_norm = true;
    EmbedHead head = EmbedHead::global_avg;
    int embedding_dim = 64;  // used by the flatten_linear head
};

// Image -> feature-map backbone plus an embedding head. All tags downsample
// by 16x overall; the head turns the final map into a fixed-length vector.
class EmbeddingExtractor {
public:
    EmbeddingExtractor(const ExtractorConfig& config, Rng& rng);

    const ExtractorConfig& config() const { return config_; }
    int feature_channels() const { return config_.channels; }
    int feature_size() const { return feature_size_; }
    int embedding_dim() const;

    Tensor features(const Tensor& images, bool train);
    Tensor backward_features(const Tensor& gfeat);

    // Embedding of a feature map through the head (forward keeps caches so
    // backward_embedding can be called).
    Tensor embed_features(const Tensor& feat, bool train);
    Tensor backward_embedding(const Tensor& gemb);

    // Convenience: images -> (N, D, 1, 1) embeddings.
    Tensor embed(const Tensor& images, bool train);

    void collect(std::vector<Param*>& out);
    void collect_state(std::vector<std::pair<std::string, std::vector<double>*>>& out);

private:
    ExtractorConfig config_;
    int feature_size_;
    Sequential backbone_;
    Sequential head_;
};

}  // namespace fsaudit
