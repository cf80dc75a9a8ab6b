#include "fsaudit/probe.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "fsaudit/errors.hpp"

namespace fsaudit {

using nlohmann::json;

QueryStrategyTag parse_strategy_tag(const std::string& s) {
    if (s == "random") return QueryStrategyTag::random;
    if (s == "high_similarity") return QueryStrategyTag::high_similarity;
    if (s == "low_similarity") return QueryStrategyTag::low_similarity;
    throw ConfigError("unknown query strategy '" + s + "'");
}

std::string to_string(QueryStrategyTag tag) {
    switch (tag) {
        case QueryStrategyTag::random: return "random";
        case QueryStrategyTag::high_similarity: return "high_similarity";
        case QueryStrategyTag::low_similarity: return "low_similarity";
    }
    throw ConfigError("invalid query strategy");
}

namespace {

// Higher is more similar for cossim/ssim, lower for mse/lpips.
double similarity_rank_value(MetricTag tag, double value) {
    return (tag == MetricTag::mse || tag == MetricTag::lpips) ? -value : value;
}

}  // namespace

ProbeSet build_probe(ModelKind architecture, const std::string& target_user_id,
                     const std::vector<const FaceImage*>& target_images,
                     const ImagePool& filler_pool, int ways, int shots, int queries,
                     const QueryStrategy& strategy, Rng& rng,
                     PerceptualBackbone* backbone) {
    const int need = shots + queries;
    if (static_cast<int>(target_images.size()) < need)
        throw ConfigError("build_probe: target user '" + target_user_id + "' has " +
                          std::to_string(target_images.size()) + " images, needs " +
                          std::to_string(need));

    ProbeSet probe;
    probe.target_user_id = target_user_id;
    probe.architecture = architecture;
    probe.strategy = strategy;

    // Target way: sample the support first, then choose queries from the rest.
    std::vector<int> order =
        rng.sample_indices(static_cast<int>(target_images.size()),
                           static_cast<int>(target_images.size()));
    std::vector<const FaceImage*> target_way;
    for (int i = 0; i < shots; ++i)
        target_way.push_back(target_images[static_cast<std::size_t>(order[i])]);
    std::vector<const FaceImage*> candidates;
    for (std::size_t i = static_cast<std::size_t>(shots); i < order.size(); ++i)
        candidates.push_back(target_images[static_cast<std::size_t>(order[i])]);

    if (strategy.tag == QueryStrategyTag::random) {
        probe.queries.assign(candidates.begin(), candidates.begin() + queries);
    } else {
        // deterministic given the ranking metric: stable order by image_id
        std::sort(candidates.begin(), candidates.end(),
                  [](const FaceImage* a, const FaceImage* b) {
                      return a->image_id < b->image_id;
                  });
        std::vector<std::pair<double, const FaceImage*>> ranked;
        for (const FaceImage* img : candidates) {
            double mean = 0.0;
            for (const FaceImage* sup : target_way)
                mean += image_similarity(strategy.ranking_metric, *img, *sup, backbone);
            mean /= static_cast<double>(target_way.size());
            ranked.emplace_back(similarity_rank_value(strategy.ranking_metric, mean), img);
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        if (strategy.tag == QueryStrategyTag::high_similarity) {
            for (int i = 0; i < queries; ++i)
                probe.queries.push_back(ranked[static_cast<std::size_t>(i)].second);
        } else {
            for (int i = 0; i < queries; ++i)
                probe.queries.push_back(
                    ranked[ranked.size() - 1 - static_cast<std::size_t>(i)].second);
        }
    }

    probe.support.push_back(std::move(target_way));

    if (architecture != ModelKind::siamese) {
        std::vector<const ImagePool::value_type*> eligible;
        for (const auto& entry : filler_pool) {
            if (entry.first == target_user_id) continue;
            if (static_cast<int>(entry.second.size()) >= shots) eligible.push_back(&entry);
        }
        if (static_cast<int>(eligible.size()) < ways - 1)
            throw ConfigError("build_probe: need " + std::to_string(ways - 1) +
                              " filler users with >= " + std::to_string(shots) +
                              " images, found " + std::to_string(eligible.size()));
        for (int idx : rng.sample_indices(static_cast<int>(eligible.size()), ways - 1)) {
            const auto& [user, images] = *eligible[static_cast<std::size_t>(idx)];
            probe.filler_user_ids.push_back(user);
            std::vector<const FaceImage*> way;
            for (int j : rng.sample_indices(static_cast<int>(images.size()), shots))
                way.push_back(images[static_cast<std::size_t>(j)]);
            probe.support.push_back(std::move(way));
        }
    }
    return probe;
}

void validate_probe(const ProbeSet& probe, int ways, int shots, int queries) {
    const int expect_ways = probe.architecture == ModelKind::siamese ? 1 : ways;
    if (static_cast<int>(probe.support.size()) != expect_ways)
        throw DataError("probe: wrong way count");
    for (const auto& way : probe.support)
        if (static_cast<int>(way.size()) != shots) throw DataError("probe: wrong shot count");
    if (static_cast<int>(probe.queries.size()) != queries)
        throw DataError("probe: wrong query count");
    std::set<std::string> support_ids;
    for (const auto* img : probe.support[0]) {
        if (img->user_id != probe.target_user_id)
            throw DataError("probe: way 0 contains a non-target image");
        support_ids.insert(img->image_id);
    }
    for (const auto* img : probe.queries) {
        if (img->user_id != probe.target_user_id)
            throw DataError("probe: query from a non-target user");
        if (support_ids.count(img->image_id))
            throw DataError("probe: image '" + img->image_id + "' in both support and query");
    }
    std::set<std::string> fillers(probe.filler_user_ids.begin(),
                                  probe.filler_user_ids.end());
    if (fillers.size() != probe.filler_user_ids.size())
        throw DataError("probe: duplicate filler users");
    if (fillers.count(probe.target_user_id))
        throw DataError("probe: target user among fillers");
}

std::vector<double> collect_scores(ModelScorer& scorer, const ProbeSet& probe,
                                   SiameseAggregation aggregation) {
    if (scorer.kind() != probe.architecture)
        throw ConfigError("collect_scores: probe built for " +
                          to_string(probe.architecture) + " but model is " +
                          to_string(scorer.kind()));
    std::vector<double> feature;
    feature.reserve(probe.queries.size());
    if (probe.architecture == ModelKind::siamese) {
        for (const FaceImage* query : probe.queries) {
            const auto scores = scorer.siamese_pair_scores(*query, probe.support[0]);
            double agg;
            if (aggregation == SiameseAggregation::max) {
                agg = *std::max_element(scores.begin(), scores.end());
            } else {
                agg = 0.0;
                for (double s : scores) agg += s;
                agg /= static_cast<double>(scores.size());
            }
            feature.push_back(agg);
        }
    } else {
        const auto per_query = scorer.episode_scores(probe.support, probe.queries);
        for (const auto& scores : per_query) feature.push_back(scores[0]);
    }
    return feature;
}

std::vector<double> reference_feature(const ProbeSet& probe, MetricTag metric,
                                      PerceptualBackbone* backbone) {
    std::vector<double> feature;
    feature.reserve(probe.queries.size());
    for (const FaceImage* query : probe.queries) {
        double mean = 0.0;
        for (const FaceImage* sup : probe.support[0])
            mean += image_similarity(metric, *query, *sup, backbone);
        feature.push_back(mean / static_cast<double>(probe.support[0].size()));
    }
    return feature;
}

MembershipLabel audit_label(const std::string& target_user_id, const SplitHalf& half) {
    if (std::binary_search(half.member_users.begin(), half.member_users.end(),
                           target_user_id))
        return MembershipLabel::member;
    if (std::binary_search(half.nonmember_users.begin(), half.nonmember_users.end(),
                           target_user_id))
        return MembershipLabel::nonmember;
    throw DataError("audit_label: user '" + target_user_id + "' not in this half");
}

MembershipLabel audit_label(const ProbeSet& probe, const SplitHalf& half) {
    return audit_label(probe.target_user_id, half);
}

std::string probe_manifest(const ProbeSet& probe) {
    json j;
    j["target_user_id"] = probe.target_user_id;
    j["architecture"] = to_string(probe.architecture);
    j["strategy"] = to_string(probe.strategy.tag);
    j["ranking_metric"] = to_string(probe.strategy.ranking_metric);
    j["filler_user_ids"] = probe.filler_user_ids;
    json support = json::array();
    for (const auto& way : probe.support) {
        json ids = json::array();
        for (const auto* img : way) ids.push_back(json{{"user", img->user_id},
                                                       {"image", img->image_id}});
        support.push_back(std::move(ids));
    }
    j["support"] = std::move(support);
    json queries = json::array();
    for (const auto* img : probe.queries) queries.push_back(img->image_id);
    j["queries"] = std::move(queries);
    return j.dump();
}

ProbeSet probe_from_manifest(const std::string& manifest,
                             const std::vector<IdentityRecord>& records) {
    const json j = json::parse(manifest);
    const auto by_user = index_records(records);
    auto find_image = [&](const std::string& user, const std::string& image) {
        auto it = by_user.find(user);
        if (it == by_user.end()) throw DataError("manifest references unknown user " + user);
        for (const auto& img : it->second->images)
            if (img.image_id == image) return &img;
        throw DataError("manifest references unknown image " + image + " of " + user);
    };

    ProbeSet probe;
    probe.target_user_id = j.at("target_user_id").get<std::string>();
    probe.architecture = parse_model_kind(j.at("architecture").get<std::string>());
    probe.strategy.tag = parse_strategy_tag(j.at("strategy").get<std::string>());
    probe.strategy.ranking_metric =
        parse_metric_tag(j.at("ranking_metric").get<std::string>());
    probe.filler_user_ids = j.at("filler_user_ids").get<std::vector<std::string>>();
    for (const auto& way : j.at("support")) {
        std::vector<const FaceImage*> images;
        for (const auto& entry : way)
            images.push_back(find_image(entry.at("user").get<std::string>(),
                                        entry.at("image").get<std::string>()));
        probe.support.push_back(std::move(images));
    }
    for (const auto& id : j.at("queries"))
        probe.queries.push_back(find_image(probe.target_user_id, id.get<std::string>()));
    return probe;
}

}  // namespace fsaudit
