#include "fsaudit/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsaudit/errors.hpp"

namespace fsaudit {

ModelKind parse_model_kind(const std::string& s) {
    if (s == "siamese") return ModelKind::siamese;
    if (s == "proto") return ModelKind::proto;
    if (s == "relation") return ModelKind::relation;
    throw ConfigError("unknown model kind '" + s + "'");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::siamese: return "siamese";
        case ModelKind::proto: return "proto";
        case ModelKind::relation: return "relation";
    }
    throw ConfigError("invalid model kind");
}

std::vector<double> proto_posterior_from_sq_distances(const std::vector<double>& sq_dists) {
    // softmax over negative squared distances
    std::vector<double> logits(sq_dists.size());
    for (std::size_t i = 0; i < sq_dists.size(); ++i) logits[i] = -sq_dists[i];
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return logits;
}

namespace {

std::vector<const FaceImage*> flatten_episode(const Episode& ep) {
    std::vector<const FaceImage*> all;
    for (const auto& way : ep.support)
        for (const auto* img : way) all.push_back(img);
    for (const auto& way : ep.query)
        for (const auto* img : way) all.push_back(img);
    return all;
}

double stable_bce(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

inline float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

}  // namespace

FewShotModel::FewShotModel(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed) {
    Rng root(init_seed);
    Rng ext_rng = root.fork("extractor");
    extractor_ = std::make_unique<EmbeddingExtractor>(config.extractor, ext_rng);
}

std::vector<Param*> FewShotModel::parameters() {
    std::vector<Param*> out;
    extractor_->collect(out);
    return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> FewShotModel::state() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    extractor_->collect_state(out);
    if (config_.kind == ModelKind::relation)
        static_cast<RelationModel*>(this)->relation_head().collect_state(out);
    return out;
}

std::vector<std::vector<double>> FewShotModel::embed_images(
    const std::vector<const FaceImage*>& images) {
    const Tensor emb =
        extractor_->embed(batch_images(images, config_.extractor.image_size), false);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(emb.n));
    for (int i = 0; i < emb.n; ++i) {
        out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(emb.c));
        for (int d = 0; d < emb.c; ++d)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] =
                emb.data[static_cast<std::size_t>(i) * emb.c + d];
    }
    return out;
}

// ---------------------------------------------------------------------------
// SiameseModel
// ---------------------------------------------------------------------------

SiameseModel::SiameseModel(const ModelConfig& config, std::uint64_t init_seed)
    : FewShotModel(config, init_seed) {
    Rng head_rng = Rng(init_seed).fork("pair_head");
    pair_head_ = std::make_unique<Linear>(extractor_->embedding_dim(), 1, head_rng,
                                          "pair_head");
}

std::vector<Param*> SiameseModel::parameters() {
    std::vector<Param*> out = FewShotModel::parameters();
    pair_head_->collect(out);
    return out;
}

double SiameseModel::score(const FaceImage& a, const FaceImage& b) {
    std::vector<const FaceImage*> batch{&a, &b};
    const Tensor emb =
        extractor_->embed(batch_images(batch, config_.extractor.image_size), false);
    const int d = emb.c;
    Tensor diff(1, d, 1, 1);
    for (int i = 0; i < d; ++i)
        diff.data[static_cast<std::size_t>(i)] =
            std::abs(emb.data[static_cast<std::size_t>(i)] -
                     emb.data[static_cast<std::size_t>(d + i)]);
    const Tensor z = pair_head_->forward(diff, false);
    return 1.0 / (1.0 + std::exp(-static_cast<double>(z.data[0])));
}

std::vector<double> SiameseModel::pair_scores(const FaceImage& query,
                                              const std::vector<const FaceImage*>& support) {
    std::vector<const FaceImage*> batch{&query};
    batch.insert(batch.end(), support.begin(), support.end());
    const Tensor emb =
        extractor_->embed(batch_images(batch, config_.extractor.image_size), false);
    const int d = emb.c;
    Tensor diffs(static_cast<int>(support.size()), d, 1, 1);
    for (std::size_t s = 0; s < support.size(); ++s)
        for (int i = 0; i < d; ++i)
            diffs.data[s * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
                std::abs(emb.data[static_cast<std::size_t>(i)] -
                         emb.data[(s + 1) * static_cast<std::size_t>(d) +
                                  static_cast<std::size_t>(i)]);
    const Tensor z = pair_head_->forward(diffs, false);
    std::vector<double> out(support.size());
    for (std::size_t s = 0; s < support.size(); ++s)
        out[s] = 1.0 / (1.0 + std::exp(-static_cast<double>(z.data[s])));
    return out;
}

double SiameseModel::train_episode(const Episode& ep, Rng& rng) {
    const auto images = flatten_episode(ep);
    const Tensor emb = extractor_->embed(
        batch_images(images, config_.extractor.image_size), true);
    const int d = emb.c;
    const int n_support = ep.ways * ep.shots;

    // Balanced pairs: one positive and one negative per query.
    struct Pair {
        int q_idx, s_idx;
        double target;
    };
    std::vector<Pair> pairs;
    for (int w = 0; w < ep.ways; ++w) {
        for (int j = 0; j < ep.queries; ++j) {
            const int q_idx = n_support + w * ep.queries + j;
            const int pos_s = w * ep.shots + rng.uniform_int(0, ep.shots - 1);
            int neg_way = rng.uniform_int(0, ep.ways - 2);
            if (neg_way >= w) ++neg_way;
            const int neg_s = neg_way * ep.shots + rng.uniform_int(0, ep.shots - 1);
            pairs.push_back({q_idx, pos_s, 1.0});
            pairs.push_back({q_idx, neg_s, 0.0});
        }
    }
    const int P = static_cast<int>(pairs.size());

    Tensor diffs(P, d, 1, 1);
    for (int p = 0; p < P; ++p) {
        const float* eq = emb.data.data() + static_cast<std::size_t>(pairs[p].q_idx) * d;
        const float* es = emb.data.data() + static_cast<std::size_t>(pairs[p].s_idx) * d;
        float* dst = diffs.data.data() + static_cast<std::size_t>(p) * d;
        for (int i = 0; i < d; ++i) dst[i] = std::abs(eq[i] - es[i]);
    }
    const Tensor z = pair_head_->forward(diffs, true);

    double loss = 0.0;
    Tensor dz(P, 1, 1, 1);
    for (int p = 0; p < P; ++p) {
        const double logit = z.data[static_cast<std::size_t>(p)];
        loss += stable_bce(logit, pairs[static_cast<std::size_t>(p)].target);
        const double prob = 1.0 / (1.0 + std::exp(-logit));
        dz.data[static_cast<std::size_t>(p)] =
            static_cast<float>((prob - pairs[static_cast<std::size_t>(p)].target) / P);
    }
    loss /= P;

    const Tensor ddiffs = pair_head_->backward(dz);
    Tensor gemb = Tensor::zeros_like(emb);
    for (int p = 0; p < P; ++p) {
        const float* eq = emb.data.data() + static_cast<std::size_t>(pairs[p].q_idx) * d;
        const float* es = emb.data.data() + static_cast<std::size_t>(pairs[p].s_idx) * d;
        const float* dd = ddiffs.data.data() + static_cast<std::size_t>(p) * d;
        float* gq = gemb.data.data() + static_cast<std::size_t>(pairs[p].q_idx) * d;
        float* gs = gemb.data.data() + static_cast<std::size_t>(pairs[p].s_idx) * d;
        for (int i = 0; i < d; ++i) {
            const float s = sign_of(eq[i] - es[i]);
            gq[i] += dd[i] * s;
            gs[i] -= dd[i] * s;
        }
    }
    extractor_->backward_features(extractor_->backward_embedding(gemb));
    return loss;
}

std::vector<std::vector<double>> SiameseModel::score_episode(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    std::vector<const FaceImage*> all;
    std::vector<int> way_offsets;
    for (const auto& way : support) {
        way_offsets.push_back(static_cast<int>(all.size()));
        all.insert(all.end(), way.begin(), way.end());
    }
    const int n_support = static_cast<int>(all.size());
    all.insert(all.end(), queries.begin(), queries.end());
    const Tensor emb =
        extractor_->embed(batch_images(all, config_.extractor.image_size), false);
    const int d = emb.c;

    // Pair scores for every (query, support) combination in one head pass.
    Tensor diffs(static_cast<int>(queries.size()) * n_support, d, 1, 1);
    std::size_t row = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const float* eq = emb.data.data() + (static_cast<std::size_t>(n_support) + q) * d;
        for (int s = 0; s < n_support; ++s, ++row) {
            const float* es = emb.data.data() + static_cast<std::size_t>(s) * d;
            float* dst = diffs.data.data() + row * d;
            for (int i = 0; i < d; ++i) dst[i] = std::abs(eq[i] - es[i]);
        }
    }
    const Tensor z = pair_head_->forward(diffs, false);

    std::vector<std::vector<double>> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        out[q].resize(support.size());
        for (std::size_t w = 0; w < support.size(); ++w) {
            const int begin = way_offsets[w];
            const int count = static_cast<int>(support[w].size());
            double agg = config_.siamese_aggregation == SiameseAggregation::max
                             ? -std::numeric_limits<double>::infinity()
                             : 0.0;
            for (int s = 0; s < count; ++s) {
                const double logit =
                    z.data[q * static_cast<std::size_t>(n_support) +
                           static_cast<std::size_t>(begin + s)];
                const double score = 1.0 / (1.0 + std::exp(-logit));
                if (config_.siamese_aggregation == SiameseAggregation::max)
                    agg = std::max(agg, score);
                else
                    agg += score;
            }
            if (config_.siamese_aggregation == SiameseAggregation::mean) agg /= count;
            out[q][w] = agg;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ProtoModel
// ---------------------------------------------------------------------------

ProtoModel::ProtoModel(const ModelConfig& config, std::uint64_t init_seed)
    : FewShotModel(config, init_seed) {}

std::vector<std::vector<double>> ProtoModel::posteriors(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    for (const auto& way : support)
        if (way.empty()) throw ConfigError("proto posteriors: empty support way");
    std::vector<const FaceImage*> all;
    for (const auto& way : support) all.insert(all.end(), way.begin(), way.end());
    const int n_support = static_cast<int>(all.size());
    all.insert(all.end(), queries.begin(), queries.end());
    const Tensor emb =
        extractor_->embed(batch_images(all, config_.extractor.image_size), false);
    const int d = emb.c;
    const int k = static_cast<int>(support.size());

    std::vector<std::vector<double>> protos(static_cast<std::size_t>(k),
                                            std::vector<double>(static_cast<std::size_t>(d), 0.0));
    int s_idx = 0;
    for (int w = 0; w < k; ++w) {
        for (std::size_t s = 0; s < support[static_cast<std::size_t>(w)].size(); ++s, ++s_idx)
            for (int i = 0; i < d; ++i)
                protos[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)] +=
                    emb.data[static_cast<std::size_t>(s_idx) * d + static_cast<std::size_t>(i)];
        for (int i = 0; i < d; ++i)
            protos[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)] /=
                static_cast<double>(support[static_cast<std::size_t>(w)].size());
    }

    std::vector<std::vector<double>> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const float* eq = emb.data.data() + (static_cast<std::size_t>(n_support) + q) * d;
        std::vector<double> sqd(static_cast<std::size_t>(k), 0.0);
        for (int w = 0; w < k; ++w) {
            double acc = 0.0;
            for (int i = 0; i < d; ++i) {
                const double diff = eq[i] - protos[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)];
                acc += diff * diff;
            }
            sqd[static_cast<std::size_t>(w)] = acc;
        }
        out[q] = proto_posterior_from_sq_distances(sqd);
    }
    return out;
}

double ProtoModel::train_episode(const Episode& ep, Rng&) {
    const auto images = flatten_episode(ep);
    const Tensor emb = extractor_->embed(
        batch_images(images, config_.extractor.image_size), true);
    const int d = emb.c;
    const int n_support = ep.ways * ep.shots;
    const int n_query = ep.ways * ep.queries;

    std::vector<double> protos(static_cast<std::size_t>(ep.ways) * d, 0.0);
    for (int w = 0; w < ep.ways; ++w)
        for (int s = 0; s < ep.shots; ++s)
            for (int i = 0; i < d; ++i)
                protos[static_cast<std::size_t>(w) * d + static_cast<std::size_t>(i)] +=
                    emb.data[(static_cast<std::size_t>(w) * ep.shots + s) * d +
                             static_cast<std::size_t>(i)] /
                    ep.shots;

    double loss = 0.0;
    Tensor gemb = Tensor::zeros_like(emb);
    for (int qw = 0; qw < ep.ways; ++qw) {
        for (int j = 0; j < ep.queries; ++j) {
            const int q_idx = n_support + qw * ep.queries + j;
            const float* eq = emb.data.data() + static_cast<std::size_t>(q_idx) * d;
            std::vector<double> sqd(static_cast<std::size_t>(ep.ways), 0.0);
            for (int w = 0; w < ep.ways; ++w) {
                double acc = 0.0;
                const double* pw = protos.data() + static_cast<std::size_t>(w) * d;
                for (int i = 0; i < d; ++i) {
                    const double diff = eq[i] - pw[i];
                    acc += diff * diff;
                }
                sqd[static_cast<std::size_t>(w)] = acc;
            }
            const std::vector<double> post = proto_posterior_from_sq_distances(sqd);
            loss -= std::log(std::max(post[static_cast<std::size_t>(qw)], 1e-300));

            for (int w = 0; w < ep.ways; ++w) {
                // d(loss)/d(logit_w) with logit = -sqd
                const double dlogit =
                    (post[static_cast<std::size_t>(w)] - (w == qw ? 1.0 : 0.0)) / n_query;
                const double dsqd = -dlogit;
                const double* pw = protos.data() + static_cast<std::size_t>(w) * d;
                float* gq = gemb.data.data() + static_cast<std::size_t>(q_idx) * d;
                for (int i = 0; i < d; ++i) {
                    const double diff = eq[i] - pw[i];
                    gq[i] += static_cast<float>(2.0 * dsqd * diff);
                    // prototype gradient spreads across the way's supports
                    const double gproto = -2.0 * dsqd * diff / ep.shots;
                    for (int s = 0; s < ep.shots; ++s)
                        gemb.data[(static_cast<std::size_t>(w) * ep.shots + s) * d +
                                  static_cast<std::size_t>(i)] +=
                            static_cast<float>(gproto);
                }
            }
        }
    }
    loss /= n_query;
    extractor_->backward_features(extractor_->backward_embedding(gemb));
    return loss;
}

std::vector<std::vector<double>> ProtoModel::score_episode(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    return posteriors(support, queries);
}

// ---------------------------------------------------------------------------
// RelationModel
// ---------------------------------------------------------------------------

RelationModel::RelationModel(const ModelConfig& config, std::uint64_t init_seed)
    : FewShotModel(config, init_seed) {
    Rng head_rng = Rng(init_seed).fork("relation_head");
    const int C = config.extractor.channels;
    const bool bn = config.extractor.batch_norm;
    int fs = config.extractor.image_size / 16;

    relation_head_.add(std::make_unique<Conv2d>(2 * C, C, 3, 1, 1, 1, head_rng, "rel1"));
    if (bn) relation_head_.add(std::make_unique<BatchNorm2d>(C, head_rng, "rel1.bn"));
    relation_head_.add(std::make_unique<Relu>());
    if (fs >= 2) {
        relation_head_.add(std::make_unique<MaxPool2d>());
        fs /= 2;
    }
    relation_head_.add(std::make_unique<Conv2d>(C, C, 3, 1, 1, 1, head_rng, "rel2"));
    if (bn) relation_head_.add(std::make_unique<BatchNorm2d>(C, head_rng, "rel2.bn"));
    relation_head_.add(std::make_unique<Relu>());
    if (fs >= 2) relation_head_.add(std::make_unique<MaxPool2d>());
    relation_head_.add(std::make_unique<GlobalAvgPool>());
    relation_head_.add(std::make_unique<Flatten>());
    relation_head_.add(std::make_unique<Linear>(C, config.relation_hidden, head_rng, "rel_fc1"));
    relation_head_.add(std::make_unique<Relu>());
    relation_head_.add(std::make_unique<Linear>(config.relation_hidden, 1, head_rng, "rel_fc2"));
    relation_head_.add(std::make_unique<Sigmoid>());
}

namespace {

// Pair tensor rows: (query 0, way 0), (query 0, way 1), ...
Tensor build_pair_tensor(const Tensor& feat, const std::vector<float>& proto_maps,
                         int n_support, int n_query, int ways) {
    const int C = feat.c;
    const std::size_t map_sz = static_cast<std::size_t>(C) * feat.h * feat.w;
    Tensor pairs(n_query * ways, 2 * C, feat.h, feat.w);
    for (int q = 0; q < n_query; ++q) {
        const float* fq = feat.sample(n_support + q);
        for (int w = 0; w < ways; ++w) {
            float* dst = pairs.sample(q * ways + w);
            std::copy(fq, fq + map_sz, dst);
            std::copy(proto_maps.data() + static_cast<std::size_t>(w) * map_sz,
                      proto_maps.data() + static_cast<std::size_t>(w + 1) * map_sz,
                      dst + map_sz);
        }
    }
    return pairs;
}

std::vector<float> mean_proto_maps(const Tensor& feat,
                                   const std::vector<int>& way_sizes) {
    const std::size_t map_sz = static_cast<std::size_t>(feat.c) * feat.h * feat.w;
    std::vector<float> protos(way_sizes.size() * map_sz, 0.0f);
    int s_idx = 0;
    for (std::size_t w = 0; w < way_sizes.size(); ++w) {
        for (int s = 0; s < way_sizes[w]; ++s, ++s_idx) {
            const float* src = feat.sample(s_idx);
            float* dst = protos.data() + w * map_sz;
            for (std::size_t i = 0; i < map_sz; ++i) dst[i] += src[i];
        }
        float* dst = protos.data() + w * map_sz;
        for (std::size_t i = 0; i < map_sz; ++i) dst[i] /= static_cast<float>(way_sizes[w]);
    }
    return protos;
}

}  // namespace

std::vector<std::vector<double>> RelationModel::relation_scores(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    for (const auto& way : support)
        if (way.empty()) throw ConfigError("relation scores: empty support way");
    std::vector<const FaceImage*> all;
    std::vector<int> way_sizes;
    for (const auto& way : support) {
        way_sizes.push_back(static_cast<int>(way.size()));
        all.insert(all.end(), way.begin(), way.end());
    }
    const int n_support = static_cast<int>(all.size());
    all.insert(all.end(), queries.begin(), queries.end());

    const Tensor feat =
        extractor_->features(batch_images(all, config_.extractor.image_size), false);
    const auto protos = mean_proto_maps(feat, way_sizes);
    const int ways = static_cast<int>(support.size());
    const Tensor pairs = build_pair_tensor(feat, protos, n_support,
                                           static_cast<int>(queries.size()), ways);
    const Tensor r = relation_head_.forward(pairs, false);

    std::vector<std::vector<double>> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        out[q].resize(static_cast<std::size_t>(ways));
        for (int w = 0; w < ways; ++w)
            out[q][static_cast<std::size_t>(w)] =
                r.data[q * static_cast<std::size_t>(ways) + static_cast<std::size_t>(w)];
    }
    return out;
}

double RelationModel::train_episode(const Episode& ep, Rng&) {
    const auto images = flatten_episode(ep);
    const Tensor feat = extractor_->features(
        batch_images(images, config_.extractor.image_size), true);
    const int n_support = ep.ways * ep.shots;
    const int n_query = ep.ways * ep.queries;
    const std::size_t map_sz = static_cast<std::size_t>(feat.c) * feat.h * feat.w;

    std::vector<int> way_sizes(static_cast<std::size_t>(ep.ways), ep.shots);
    const auto protos = mean_proto_maps(feat, way_sizes);
    const Tensor pairs = build_pair_tensor(feat, protos, n_support, n_query, ep.ways);
    const Tensor r = relation_head_.forward(pairs, true);

    const int P = n_query * ep.ways;
    double loss = 0.0;
    Tensor dr(P, 1, 1, 1);
    for (int q = 0; q < n_query; ++q) {
        const int query_way = q / ep.queries;
        for (int w = 0; w < ep.ways; ++w) {
            const int p = q * ep.ways + w;
            const double target = (w == query_way) ? 1.0 : 0.0;
            const double diff = r.data[static_cast<std::size_t>(p)] - target;
            loss += diff * diff;
            dr.data[static_cast<std::size_t>(p)] = static_cast<float>(2.0 * diff / P);
        }
    }
    loss /= P;

    const Tensor dpairs = relation_head_.backward(dr);
    Tensor gfeat = Tensor::zeros_like(feat);
    for (int q = 0; q < n_query; ++q) {
        for (int w = 0; w < ep.ways; ++w) {
            const float* dpair = dpairs.sample(q * ep.ways + w);
            float* gq = gfeat.sample(n_support + q);
            for (std::size_t i = 0; i < map_sz; ++i) gq[i] += dpair[i];
            // second half flows into the way's support features via the mean
            for (int s = 0; s < ep.shots; ++s) {
                float* gs = gfeat.sample(w * ep.shots + s);
                for (std::size_t i = 0; i < map_sz; ++i)
                    gs[i] += dpair[map_sz + i] / static_cast<float>(ep.shots);
            }
        }
    }
    extractor_->backward_features(gfeat);
    return loss;
}

std::vector<std::vector<double>> RelationModel::score_episode(
    const std::vector<std::vector<const FaceImage*>>& support,
    const std::vector<const FaceImage*>& queries) {
    return relation_scores(support, queries);
}

std::vector<Param*> RelationModel::parameters() {
    std::vector<Param*> out = FewShotModel::parameters();
    relation_head_.collect(out);
    return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<FewShotModel> make_model(const ModelConfig& config,
                                         std::uint64_t init_seed) {
    switch (config.kind) {
        case ModelKind::siamese: return std::make_unique<SiameseModel>(config, init_seed);
        case ModelKind::proto: return std::make_unique<ProtoModel>(config, init_seed);
        case ModelKind::relation: return std::make_unique<RelationModel>(config, init_seed);
    }
    throw ConfigError("invalid model kind");
}

}  // namespace fsaudit
