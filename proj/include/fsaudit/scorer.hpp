#pragma once

#include <memory>
#include <optional>

#include "fsaudit/defenses.hpp"
#include "fsaudit/models.hpp"

namespace fsaudit {

// The auditor's query surface: similarity scores only. The in-process
// implementation mirrors what a remote facial-recognition API would expose.
class ModelScorer {
public:
    virtual ~ModelScorer() = default;
    virtual ModelKind kind() const = 0;

    // Siamese: raw per-support pair scores for one query image.
    virtual std::vector<double> siamese_pair_scores(
        const FaceImage& query, const std::vector<const FaceImage*>& support) = 0;

    // Proto/Relation: per-query score vectors over the support ways.
    virtual std::vector<std::vector<double>> episode_scores(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) = 0;
};

class RawScorer : public ModelScorer {
public:
    explicit RawScorer(FewShotModel& model) : model_(model) {}
    ModelKind kind() const override { return model_.kind(); }
    std::vector<double> siamese_pair_scores(
        const FaceImage& query, const std::vector<const FaceImage*>& support) override;
    std::vector<std::vector<double>> episode_scores(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) override;

private:
    FewShotModel& model_;
};

// Applies output-side defenses to every score the wrapped model emits.
// Laplace noise perturbs each scalar; the label-preserving perturbation
// rewrites whole score vectors (identification outputs only).
class DefendedScorer : public ModelScorer {
public:
    DefendedScorer(ModelScorer& inner, std::optional<OutputNoiseConfig> laplace,
                   std::optional<MemguardConfig> memguard, int memguard_target_way = 0);

    ModelKind kind() const override { return inner_.kind(); }
    std::vector<double> siamese_pair_scores(
        const FaceImage& query, const std::vector<const FaceImage*>& support) override;
    std::vector<std::vector<double>> episode_scores(
        const std::vector<std::vector<const FaceImage*>>& support,
        const std::vector<const FaceImage*>& queries) override;

    int memguard_skipped_ties() const { return memguard_skipped_ties_; }

private:
    ModelScorer& inner_;
    std::optional<OutputNoiseConfig> laplace_;
    std::optional<MemguardConfig> memguard_;
    int memguard_target_way_;
    Rng noise_rng_;
    int memguard_skipped_ties_ = 0;
};

// Identification accuracy through the scoring surface (works for defended
// models; Siamese aggregates pair scores per way).
double evaluate_accuracy_scorer(ModelScorer& scorer, SiameseAggregation aggregation,
                                const ImagePool& pool, int ways, int shots, int queries,
                                int episodes, std::uint64_t seed);

}  // namespace fsaudit
