#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fsaudit/episode.hpp"
#include "fsaudit/extractor.hpp"

namespace fsaudit {

enum class ModelKind { siamese, proto, relation };

ModelKind parse_model_kind(const std::string& s);
std::string to_string(ModelKind kind);

enum class SiameseAggregation { mean, max };

struct ModelConfig {
    ModelKind kind = ModelKind::proto;
    ExtractorConfig extractor;
    int relation_hidden = 8;
    SiameseAggregation siamese_aggregation = SiameseAggregation::mean;
};

// Softmax over negative squared distances; shared by ProtoModel and the
// argmax-invariance property tests.
std::vector<double> proto_posterior_from_sq_distances(const std::vector<double>& sq_dists);

class FewShotModel {
public:
    FewShotModel(const ModelConfig& config, std::uint64_t init_seed);
    virtual ~FewShotModel() = default;

    ModelKind kind() const { return config_.kind; }
    const ModelConfig& config() const { return config_; }
    std::uint64_t init_seed() const { return init_seed_; }
    EmbeddingExtractor& extractor() { return *extractor_; }

    virtual std::vector<Param*> parameters();
    virtual std::vector<std::pair<std::string, std::vector<double>*>> state();

    // Deterministic eval-mode embeddings (white-box surface used by the
    // embedding-distance baseline and by tests).
    std::vector<std::vector<double>> embed_images(
        const std::vector<const FaceImage*>& images);

    // Accumulates gradients for one episode and returns the mean loss.
    virtual double train_episode(const Episode& ep, Rng& rng) = 0;

    // Eval-mode scores: for each query, a length-k vector of per-way scores
    // (mean pair score / posterior / relation score).
    virtual std::vector<std::vector<double>> score_episode(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) = 0;

    std::vector<double>& loss_history() { return loss_history_; }
    const std::vector<double>& loss_history() const { return loss_history_; }

protected:
    ModelConfig config_;
    std::uint64_t init_seed_;
    std::unique_ptr<EmbeddingExtractor> extractor_;
    std::vector<double> loss_history_;
};

class SiameseModel : public FewShotModel {
public:
    SiameseModel(const ModelConfig& config, std::uint64_t init_seed);

    // score = sigmoid(pair_head(|embed(a) - embed(b)|)), symmetric in (a,b).
    double score(const FaceImage& a, const FaceImage& b);

    // Per-query scores against each support image of a single way.
    std::vector<double> pair_scores(const FaceImage& query,
                                    const std::vector<const FaceImage*>& support);

    double train_episode(const Episode& ep, Rng& rng) override;
    std::vector<std::vector<double>> score_episode(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) override;
    std::vector<Param*> parameters() override;

    Linear& pair_head() { return *pair_head_; }

private:
    std::unique_ptr<Linear> pair_head_;
};

class ProtoModel : public FewShotModel {
public:
    ProtoModel(const ModelConfig& config, std::uint64_t init_seed);

    // Per-query posterior over the k ways (sums to 1).
    std::vector<std::vector<double>> posteriors(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries);

    double train_episode(const Episode& ep, Rng& rng) override;
    std::vector<std::vector<double>> score_episode(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) override;
};

class RelationModel : public FewShotModel {
public:
    RelationModel(const ModelConfig& config, std::uint64_t init_seed);

    // Per-query length-k vector of relation scores in [0,1].
    std::vector<std::vector<double>> relation_scores(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries);

    double train_episode(const Episode& ep, Rng& rng) override;
    std::vector<std::vector<double>> score_episode(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) override;
    std::vector<Param*> parameters() override;

    Sequential& relation_head() { return relation_head_; }

private:
    Sequential relation_head_;
};

std::unique_ptr<FewShotModel> make_model(const ModelConfig& config,
                                         std::uint64_t init_seed);

}  // namespace fsaudit
