#include "fsaudit/train.hpp"

#include <cmath>

#include "fsaudit/errors.hpp"

namespace fsaudit {

namespace {

std::string default_optimizer(ModelKind kind) {
    return kind == ModelKind::proto ? "sgd" : "adam";
}

double default_lr(const std::string& optimizer) {
    return optimizer == "sgd" ? 1e-2 : 1e-3;
}

}  // namespace

TrainedModel train_model(const ModelConfig& model_config, const ImagePool& pool,
                         const TrainConfig& config) {
    if (!config.seed_set) throw ConfigError("train_model: seed is mandatory");
    if (config.epochs < 1 || config.episodes_per_epoch < 1)
        throw ConfigError("train_model: epochs and episodes_per_epoch must be positive");

    TrainedModel result;
    result.model = make_model(model_config, derive_seed(config.seed, "init"));
    FewShotModel& model = *result.model;

    const std::string opt_tag =
        config.optimizer.empty() ? default_optimizer(model_config.kind) : config.optimizer;
    const double base_lr = config.lr > 0.0 ? config.lr : default_lr(opt_tag);
    auto optimizer = make_optimizer(opt_tag, model.parameters(), base_lr);
    const StepScheduler scheduler{base_lr, config.scheduler_step, config.scheduler_gamma};

    Rng dp_rng(derive_seed(config.seed, "dp_noise"));
    const bool dp_active = config.dp.has_value() && config.dp->level != "off";

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        optimizer->set_lr(scheduler.lr_for_epoch(epoch));
        double epoch_loss = 0.0;
        for (int e = 0; e < config.episodes_per_epoch; ++e) {
            const std::uint64_t episode_index =
                static_cast<std::uint64_t>(epoch) * config.episodes_per_epoch +
                static_cast<std::uint64_t>(e);
            Rng ep_rng(derive_seed(config.seed, "episode", episode_index));
            const Episode ep =
                sample_episode(pool, config.ways, config.shots, config.queries, ep_rng);

            optimizer->zero_grad();
            const double loss = model.train_episode(ep, ep_rng);
            if (!std::isfinite(loss))
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", episode " +
                                   std::to_string(e));
            if (dp_active) {
                const auto info = optimizer->sanitize_gradients(*config.dp, dp_rng);
                result.dp_step_norms.push_back(info.clipped_norm);
            }
            optimizer->step();
            epoch_loss += loss;
        }
        result.epoch_losses.push_back(epoch_loss / config.episodes_per_epoch);
    }
    model.loss_history() = result.epoch_losses;
    return result;
}

double evaluate_accuracy(FewShotModel& model, const ImagePool& pool, int ways,
                         int shots, int queries, int episodes, std::uint64_t seed) {
    if (ways == 1) return 1.0;  // single candidate
    long correct = 0, total = 0;
    for (int e = 0; e < episodes; ++e) {
        Rng rng(derive_seed(seed, "eval_episode", static_cast<std::uint64_t>(e)));
        const Episode ep = sample_episode(pool, ways, shots, queries, rng);
        std::vector<const FaceImage*> flat_queries;
        for (const auto& way : ep.query)
            for (const auto* img : way) flat_queries.push_back(img);
        const auto scores = model.score_episode(ep.support, flat_queries);
        for (std::size_t q = 0; q < scores.size(); ++q) {
            const int true_way = static_cast<int>(q) / queries;
            int best = 0;
            for (std::size_t w = 1; w < scores[q].size(); ++w)
                if (scores[q][w] > scores[q][static_cast<std::size_t>(best)])
                    best = static_cast<int>(w);
            if (best == true_way) ++correct;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

VerificationReport siamese_verification(SiameseModel& model, const ImagePool& pool,
                                        double threshold, int pairs_per_class,
                                        std::uint64_t seed) {
    Rng rng(derive_seed(seed, "verification"));
    std::vector<const ImagePool::value_type*> users;
    for (const auto& entry : pool)
        if (entry.second.size() >= 2) users.push_back(&entry);
    if (users.size() < 2)
        throw ConfigError("siamese_verification: need at least 2 users with 2+ images");

    VerificationReport report;
    report.threshold = threshold;
    report.pairs_per_class = pairs_per_class;
    int same_accepts = 0, diff_accepts = 0;
    for (int i = 0; i < pairs_per_class; ++i) {
        const auto& same_user =
            *users[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(users.size()) - 1))];
        const auto idx = rng.sample_indices(static_cast<int>(same_user.second.size()), 2);
        if (model.score(*same_user.second[static_cast<std::size_t>(idx[0])],
                        *same_user.second[static_cast<std::size_t>(idx[1])]) >= threshold)
            ++same_accepts;

        const auto two = rng.sample_indices(static_cast<int>(users.size()), 2);
        const auto& ua = *users[static_cast<std::size_t>(two[0])];
        const auto& ub = *users[static_cast<std::size_t>(two[1])];
        const auto& img_a =
            *ua.second[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ua.second.size()) - 1))];
        const auto& img_b =
            *ub.second[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ub.second.size()) - 1))];
        if (model.score(img_a, img_b) >= threshold) ++diff_accepts;
    }
    report.true_accept_rate = static_cast<double>(same_accepts) / pairs_per_class;
    report.false_accept_rate = static_cast<double>(diff_accepts) / pairs_per_class;
    return report;
}

}  // namespace fsaudit
