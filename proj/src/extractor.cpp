#include "fsaudit/extractor.hpp"

#include "fsaudit/errors.hpp"

namespace fsaudit {

ExtractorTag parse_extractor_tag(const std::string& s) {
    if (s == "simple_cnn") return ExtractorTag::simple_cnn;
    if (s == "mobilenet_like") return ExtractorTag::mobilenet_like;
    if (s == "resnet18_like") return ExtractorTag::resnet18_like;
    if (s == "resnet50_like") return ExtractorTag::resnet50_like;
    if (s == "googlenet_like") return ExtractorTag::googlenet_like;
    throw ConfigError("unknown extractor tag '" + s + "'");
}

std::string to_string(ExtractorTag tag) {
    switch (tag) {
        case ExtractorTag::simple_cnn: return "simple_cnn";
        case ExtractorTag::mobilenet_like: return "mobilenet_like";
        case ExtractorTag::resnet18_like: return "resnet18_like";
        case ExtractorTag::resnet50_like: return "resnet50_like";
        case ExtractorTag::googlenet_like: return "googlenet_like";
    }
    throw ConfigError("invalid extractor tag");
}

namespace {

void add_conv_block(Sequential& net, int in_ch, int out_ch, bool bn, bool pool,
                    Rng& rng, const std::string& name) {
    net.add(std::make_unique<Conv2d>(in_ch, out_ch, 3, 1, 1, 1, rng, name));
    if (bn) net.add(std::make_unique<BatchNorm2d>(out_ch, rng, name + ".bn"));
    net.add(std::make_unique<Relu>());
    if (pool) net.add(std::make_unique<MaxPool2d>());
}

std::unique_ptr<Sequential> conv_bn_relu(int in_ch, int out_ch, int kernel, int pad,
                                         bool bn, Rng& rng, const std::string& name) {
    auto seq = std::make_unique<Sequential>();
    seq->add(std::make_unique<Conv2d>(in_ch, out_ch, kernel, 1, pad, 1, rng, name));
    if (bn) seq->add(std::make_unique<BatchNorm2d>(out_ch, rng, name + ".bn"));
    seq->add(std::make_unique<Relu>());
    return seq;
}

}  // namespace

EmbeddingExtractor::EmbeddingExtractor(const ExtractorConfig& config, Rng& rng)
    : config_(config) {
    const int C = config.channels;
    if (C < 4) throw ConfigError("extractor channels must be >= 4");
    if (config.image_size % 16 != 0)
        throw ConfigError("image size must be a multiple of 16 (four 2x pools), got " +
                          std::to_string(config.image_size));
    const bool bn = config.batch_norm;

    switch (config.tag) {
        case ExtractorTag::simple_cnn:
            add_conv_block(backbone_, 3, C, bn, true, rng, "block1");
            add_conv_block(backbone_, C, C, bn, true, rng, "block2");
            add_conv_block(backbone_, C, C, bn, true, rng, "block3");
            add_conv_block(backbone_, C, C, bn, true, rng, "block4");
            break;
        case ExtractorTag::mobilenet_like: {
            add_conv_block(backbone_, 3, C, bn, true, rng, "stem");
            for (int b = 2; b <= 4; ++b) {
                const std::string name = "block" + std::to_string(b);
                // depthwise 3x3 then pointwise 1x1
                backbone_.add(std::make_unique<Conv2d>(C, C, 3, 1, 1, C, rng, name + ".dw"));
                if (bn) backbone_.add(std::make_unique<BatchNorm2d>(C, rng, name + ".dw.bn"));
                backbone_.add(std::make_unique<Relu>());
                backbone_.add(std::make_unique<Conv2d>(C, C, 1, 1, 0, 1, rng, name + ".pw"));
                if (bn) backbone_.add(std::make_unique<BatchNorm2d>(C, rng, name + ".pw.bn"));
                backbone_.add(std::make_unique<Relu>());
                backbone_.add(std::make_unique<MaxPool2d>());
            }
            break;
        }
        case ExtractorTag::resnet18_like: {
            add_conv_block(backbone_, 3, C, bn, true, rng, "stem");
            for (int b = 2; b <= 4; ++b) {
                const std::string name = "block" + std::to_string(b);
                auto body = std::make_unique<Sequential>();
                body->add(std::make_unique<Conv2d>(C, C, 3, 1, 1, 1, rng, name + ".conv1"));
                if (bn) body->add(std::make_unique<BatchNorm2d>(C, rng, name + ".bn1"));
                body->add(std::make_unique<Relu>());
                body->add(std::make_unique<Conv2d>(C, C, 3, 1, 1, 1, rng, name + ".conv2"));
                if (bn) body->add(std::make_unique<BatchNorm2d>(C, rng, name + ".bn2"));
                backbone_.add(std::make_unique<Residual>(std::move(body)));
                backbone_.add(std::make_unique<Relu>());
                backbone_.add(std::make_unique<MaxPool2d>());
            }
            break;
        }
        case ExtractorTag::resnet50_like: {
            add_conv_block(backbone_, 3, C, bn, true, rng, "stem");
            const int mid = std::max(C / 2, 4);
            for (int b = 2; b <= 4; ++b) {
                const std::string name = "block" + std::to_string(b);
                auto body = std::make_unique<Sequential>();
                body->add(std::make_unique<Conv2d>(C, mid, 1, 1, 0, 1, rng, name + ".reduce"));
                if (bn) body->add(std::make_unique<BatchNorm2d>(mid, rng, name + ".bn1"));
                body->add(std::make_unique<Relu>());
                body->add(std::make_unique<Conv2d>(mid, mid, 3, 1, 1, 1, rng, name + ".conv"));
                if (bn) body->add(std::make_unique<BatchNorm2d>(mid, rng, name + ".bn2"));
                body->add(std::make_unique<Relu>());
                body->add(std::make_unique<Conv2d>(mid, C, 1, 1, 0, 1, rng, name + ".expand"));
                if (bn) body->add(std::make_unique<BatchNorm2d>(C, rng, name + ".bn3"));
                backbone_.add(std::make_unique<Residual>(std::move(body)));
                backbone_.add(std::make_unique<Relu>());
                backbone_.add(std::make_unique<MaxPool2d>());
            }
            break;
        }
        case ExtractorTag::googlenet_like: {
            add_conv_block(backbone_, 3, C, bn, true, rng, "stem");
            const int half = std::max(C / 2, 2);
            const int quarter = std::max(C / 4, 2);
            for (int b = 2; b <= 4; ++b) {
                const std::string name = "block" + std::to_string(b);
                auto concat = std::make_unique<ChannelConcat>();
                concat->add_branch(conv_bn_relu(C, half, 1, 0, bn, rng, name + ".b1"));
                auto b2 = conv_bn_relu(C, quarter, 1, 0, bn, rng, name + ".b2a");
                auto b2b = conv_bn_relu(quarter, C - half, 3, 1, bn, rng, name + ".b2b");
                // chain reduce + 3x3 into one branch
                auto branch2 = std::make_unique<Sequential>();
                branch2->add(std::move(b2));
                branch2->add(std::move(b2b));
                concat->add_branch(std::move(branch2));
                backbone_.add(std::move(concat));
                backbone_.add(std::make_unique<MaxPool2d>());
            }
            break;
        }
    }
    feature_size_ = config.image_size / 16;

    if (config.head == EmbedHead::global_avg) {
        head_.add(std::make_unique<GlobalAvgPool>());
    } else {
        head_.add(std::make_unique<Flatten>());
        head_.add(std::make_unique<Linear>(C * feature_size_ * feature_size_,
                                           config.embedding_dim, rng, "embed"));
    }
}

int EmbeddingExtractor::embedding_dim() const {
    return config_.head == EmbedHead::global_avg ? config_.channels
                                                 : config_.embedding_dim;
}

Tensor EmbeddingExtractor::features(const Tensor& images, bool train) {
    return backbone_.forward(images, train);
}

Tensor EmbeddingExtractor::backward_features(const Tensor& gfeat) {
    return backbone_.backward(gfeat);
}

Tensor EmbeddingExtractor::embed_features(const Tensor& feat, bool train) {
    return head_.forward(feat, train);
}

Tensor EmbeddingExtractor::backward_embedding(const Tensor& gemb) {
    return head_.backward(gemb);
}

Tensor EmbeddingExtractor::embed(const Tensor& images, bool train) {
    return embed_features(features(images, train), train);
}

void EmbeddingExtractor::collect(std::vector<Param*>& out) {
    backbone_.collect(out);
    head_.collect(out);
}

void EmbeddingExtractor::collect_state(
    std::vector<std::pair<std::string, std::vector<double>*>>& out) {
    backbone_.collect_state(out);
    head_.collect_state(out);
}

}  // namespace fsaudit
