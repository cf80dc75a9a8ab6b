#pragma once

#include <memory>
#include <optional>

#include "fsaudit/models.hpp"
#include "fsaudit/optim.hpp"

namespace fsaudit {

struct TrainConfig {
    int epochs = 30;
    int episodes_per_epoch = 100;
    int ways = 5;
    int shots = 5;
    int queries = 5;
    std::string optimizer;  // empty = per-kind default (adam / sgd / adam)
    double lr = 0.0;        // 0 = per-kind default (1e-3 adam, 1e-2 sgd)
    int scheduler_step = 20;
    double scheduler_gamma = 0.5;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::optional<DpConfig> dp;

    TrainConfig& with_seed(std::uint64_t s) {
        seed = s;
        seed_set = true;
        return *this;
    }
};

struct TrainedModel {
    std::unique_ptr<FewShotModel> model;
    std::vector<double> epoch_losses;
    // present when dp is active: per-step l2 norms after clipping, before noise
    std::vector<double> dp_step_norms;
};

// Episodic training on the given pool. Siamese pairs support/query images
// with BCE; Proto uses cross-entropy on posteriors; Relation uses MSE
// against the one-hot way indicator.
TrainedModel train_model(const ModelConfig& model_config, const ImagePool& pool,
                         const TrainConfig& config);

// Identification accuracy: fraction of queries whose argmax way is their own.
double evaluate_accuracy(FewShotModel& model, const ImagePool& pool, int ways,
                         int shots, int queries, int episodes, std::uint64_t seed);

// Open-set verification at a score threshold (Siamese only): accept when the
// pair score meets the threshold.
struct VerificationReport {
    double true_accept_rate = 0.0;
    double false_accept_rate = 0.0;
    int pairs_per_class = 0;
    double threshold = 0.5;
};

VerificationReport siamese_verification(SiameseModel& model, const ImagePool& pool,
                                        double threshold, int pairs_per_class,
                                        std::uint64_t seed);

}  // namespace fsaudit
