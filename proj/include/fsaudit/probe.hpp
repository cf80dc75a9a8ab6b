#pragma once

#include <string>
#include <vector>

#include "fsaudit/metrics.hpp"
#include "fsaudit/scorer.hpp"
#include "fsaudit/split.hpp"

namespace fsaudit {

enum class QueryStrategyTag { random, high_similarity, low_similarity };

QueryStrategyTag parse_strategy_tag(const std::string& s);
std::string to_string(QueryStrategyTag tag);

struct QueryStrategy {
    QueryStrategyTag tag = QueryStrategyTag::random;
    MetricTag ranking_metric = MetricTag::cossim;
};

// Probing set for one target user. Siamese probes have a single way (the
// target); Proto/Relation probes pin the target to way 0 and fill the
// remaining ways with other users. Queries never appear in the support.
struct ProbeSet {
    std::string target_user_id;
    ModelKind architecture = ModelKind::proto;
    std::vector<std::vector<const FaceImage*>> support;
    std::vector<const FaceImage*> queries;
    std::vector<std::string> filler_user_ids;
    QueryStrategy strategy;
};

// filler_pool supplies the non-target ways (Proto/Relation); the target user
// is excluded automatically. Under the high/low similarity strategies the
// queries are the top/bottom q remaining images ranked by mean similarity to
// the support.
ProbeSet build_probe(ModelKind architecture, const std::string& target_user_id,
                     const std::vector<const FaceImage*>& target_images,
                     const ImagePool& filler_pool, int ways, int shots, int queries,
                     const QueryStrategy& strategy, Rng& rng,
                     PerceptualBackbone* backbone = nullptr);

void validate_probe(const ProbeSet& probe, int ways, int shots, int queries);

// Basic auditing feature: one score per query. Siamese reduces the per-pair
// scores over the target way's supports; Proto/Relation take the way-0
// component of each query's score vector (filler scores are discarded).
std::vector<double> collect_scores(ModelScorer& scorer, const ProbeSet& probe,
                                   SiameseAggregation aggregation = SiameseAggregation::mean);

// Reference auditing feature: mean image-level similarity between each query
// and the target way's supports, computed on raw pixels only.
std::vector<double> reference_feature(const ProbeSet& probe, MetricTag metric,
                                      PerceptualBackbone* backbone = nullptr);

enum class MembershipLabel { nonmember = 0, member = 1 };

// Member iff the target user is a member user of the model's training half,
// regardless of whether the probe's images were trained on.
MembershipLabel audit_label(const std::string& target_user_id, const SplitHalf& half);
MembershipLabel audit_label(const ProbeSet& probe, const SplitHalf& half);

// Replayable manifest (target, image ids, fillers, strategy).
std::string probe_manifest(const ProbeSet& probe);
ProbeSet probe_from_manifest(const std::string& manifest,
                             const std::vector<IdentityRecord>& records);

}  // namespace fsaudit
