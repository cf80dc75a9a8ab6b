#include "fsaudit/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "fsaudit/errors.hpp"

namespace fsaudit {

std::vector<double> RawScorer::siamese_pair_scores(
    const FaceImage& query, const std::vector<const FaceImage*>& support) {
    if (model_.kind() != ModelKind::siamese)
        throw ConfigError("siamese_pair_scores on a " + to_string(model_.kind()) + " model");
    return static_cast<SiameseModel&>(model_).pair_scores(query, support);
}

std::vector<std::vector<double>> RawScorer::episode_scores(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    if (model_.kind() == ModelKind::siamese)
        throw ConfigError("episode_scores on a siamese model; use siamese_pair_scores");
    return model_.score_episode(support, queries);
}

DefendedScorer::DefendedScorer(ModelScorer& inner, std::optional<OutputNoiseConfig> laplace,
                               std::optional<MemguardConfig> memguard,
                               int memguard_target_way)
    : inner_(inner), laplace_(std::move(laplace)), memguard_(std::move(memguard)),
      memguard_target_way_(memguard_target_way),
      noise_rng_(laplace_ ? laplace_->seed : 0) {}

std::vector<double> DefendedScorer::siamese_pair_scores(
    const FaceImage& query, const std::vector<const FaceImage*>& support) {
    std::vector<double> scores = inner_.siamese_pair_scores(query, support);
    if (laplace_) scores = perturb_output(scores, *laplace_, noise_rng_);
    return scores;
}

std::vector<std::vector<double>> DefendedScorer::episode_scores(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    auto per_query = inner_.episode_scores(support, queries);
    for (auto& scores : per_query) {
        if (memguard_) {
            const MemguardResult r =
                memguard_perturb(scores, memguard_target_way_, memguard_->margin);
            if (r.skipped) ++memguard_skipped_ties_;
            scores = r.scores;
        }
        if (laplace_) scores = perturb_output(scores, *laplace_, noise_rng_);
    }
    return per_query;
}

double evaluate_accuracy_scorer(ModelScorer& scorer, SiameseAggregation aggregation,
                                const ImagePool& pool, int ways, int shots, int queries,
                                int episodes, std::uint64_t seed) {
    if (ways == 1) return 1.0;
    long correct = 0, total = 0;
    for (int e = 0; e < episodes; ++e) {
        Rng rng(derive_seed(seed, "eval_episode", static_cast<std::uint64_t>(e)));
        const Episode ep = sample_episode(pool, ways, shots, queries, rng);
        std::vector<const FaceImage*> flat_queries;
        for (const auto& way : ep.query)
            for (const auto* img : way) flat_queries.push_back(img);

        std::vector<std::vector<double>> scores;
        if (scorer.kind() == ModelKind::siamese) {
            scores.resize(flat_queries.size());
            for (std::size_t q = 0; q < flat_queries.size(); ++q) {
                scores[q].resize(static_cast<std::size_t>(ways));
                for (int w = 0; w < ways; ++w) {
                    const auto pair_scores = scorer.siamese_pair_scores(
                        *flat_queries[q], ep.support[static_cast<std::size_t>(w)]);
                    double agg;
                    if (aggregation == SiameseAggregation::max) {
                        agg = *std::max_element(pair_scores.begin(), pair_scores.end());
                    } else {
                        agg = 0.0;
                        for (double s : pair_scores) agg += s;
                        agg /= static_cast<double>(pair_scores.size());
                    }
                    scores[q][static_cast<std::size_t>(w)] = agg;
                }
            }
        } else {
            scores = scorer.episode_scores(ep.support, flat_queries);
        }

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

}  // namespace fsaudit
