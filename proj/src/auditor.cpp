#include "fsaudit/auditor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "fsaudit/errors.hpp"

namespace fsaudit {

using nlohmann::json;

std::vector<AuditSample> build_audit_dataset(ModelScorer& scorer,
                                             const std::vector<IdentityRecord>& records,
                                             const SplitHalf& half,
                                             const ProbingConfig& config,
                                             std::uint64_t seed,
                                             PerceptualBackbone* backbone) {
    const ImagePool pool = audit_pool(records, half);

    // Balance by user: the smaller cell caps both sides.
    const int n_users = static_cast<int>(
        std::min(half.member_users.size(), half.nonmember_users.size()));
    if (n_users < 1) throw DataError("build_audit_dataset: empty member or nonmember cell");

    Rng pick_rng(derive_seed(seed, "audit_users"));
    auto pick = [&](const std::vector<std::string>& users, const char* label) {
        std::vector<std::string> chosen;
        if (static_cast<int>(users.size()) == n_users) {
            chosen = users;
        } else {
            for (int idx : pick_rng.sample_indices(static_cast<int>(users.size()), n_users))
                chosen.push_back(users[static_cast<std::size_t>(idx)]);
            std::sort(chosen.begin(), chosen.end());
        }
        (void)label;
        return chosen;
    };
    const auto member_users = pick(half.member_users, "member");
    const auto nonmember_users = pick(half.nonmember_users, "nonmember");

    std::vector<AuditSample> samples;
    int built_members = 0, built_nonmembers = 0;
    auto build_for_user = [&](const std::string& user, int label) {
        const auto& images = pool.at(user);
        for (int p = 0; p < config.probes_per_user; ++p) {
            Rng probe_rng(derive_seed(seed, "probe:" + user, static_cast<std::uint64_t>(p)));
            ProbeSet probe = build_probe(scorer.kind(), user, images, pool, config.ways,
                                         config.shots, config.queries, config.strategy,
                                         probe_rng, backbone);
            AuditSample sample;
            std::vector<double> basic = collect_scores(scorer, probe, config.aggregation);
            std::vector<double> reference;
            if (config.reference_enabled)
                reference = reference_feature(probe, config.reference_metric, backbone);
            sample.feature = assemble_feature(std::move(basic), std::move(reference),
                                              config.reference_metric);
            sample.label = label;
            sample.target_user_id = user;
            sample.provenance = "probe" + std::to_string(p);
            sample.manifest = probe_manifest(probe);
            samples.push_back(std::move(sample));
        }
    };
    for (const auto& user : member_users) {
        build_for_user(user, 1);
        ++built_members;
    }
    for (const auto& user : nonmember_users) {
        build_for_user(user, 0);
        ++built_nonmembers;
    }
    if (std::abs(built_members - built_nonmembers) > 1)
        throw DataError("build_audit_dataset: imbalance beyond rounding (" +
                        std::to_string(built_members) + " vs " +
                        std::to_string(built_nonmembers) + " users)");
    return samples;
}

// ---------------------------------------------------------------------------
// AuditorModel
// ---------------------------------------------------------------------------

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct AdamStateD {
    std::vector<double> m, v;
    explicit AdamStateD(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
    void update(std::vector<double>& w, const std::vector<double>& g, double lr, long t) {
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
        }
    }
};

}  // namespace

AuditorModel AuditorModel::train(const std::vector<AuditSample>& samples,
                                 const AuditorConfig& config, std::uint64_t seed) {
    if (samples.empty()) throw ConfigError("train_auditor: no samples");
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (const auto& s : samples) {
        features.push_back(s.feature.flat());
        labels.push_back(s.label);
    }
    Layout layout;
    layout.input_dim = static_cast<int>(features.front().size());
    layout.queries = static_cast<int>(samples.front().feature.basic.size());
    layout.reference_on = !samples.front().feature.reference.empty();
    layout.metric = samples.front().feature.metric;
    return train_on_features(features, labels, config, seed, layout);
}

AuditorModel AuditorModel::train_on_features(const std::vector<std::vector<double>>& features,
                                             const std::vector<int>& labels,
                                             const AuditorConfig& config,
                                             std::uint64_t seed, Layout layout) {
    const std::size_t n = features.size();
    if (n < 2) throw ConfigError("train_auditor: need at least 2 samples");
    int positives = 0;
    for (int y : labels) positives += y;
    if (positives == 0 || positives == static_cast<int>(n))
        throw ConfigError("train_auditor: degenerate single-class input");
    const int d = static_cast<int>(features.front().size());
    for (const auto& f : features)
        if (static_cast<int>(f.size()) != d)
            throw ShapeError("train_auditor: inconsistent feature lengths");

    AuditorModel model;
    model.layout_ = layout;
    model.hidden_ = config.hidden;

    // Standardization statistics from the training set only.
    model.feat_mean_.assign(static_cast<std::size_t>(d), 0.0);
    model.feat_std_.assign(static_cast<std::size_t>(d), 0.0);
    for (const auto& f : features)
        for (int i = 0; i < d; ++i) model.feat_mean_[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
    for (double& v : model.feat_mean_) v /= static_cast<double>(n);
    for (const auto& f : features)
        for (int i = 0; i < d; ++i) {
            const double c = f[static_cast<std::size_t>(i)] - model.feat_mean_[static_cast<std::size_t>(i)];
            model.feat_std_[static_cast<std::size_t>(i)] += c * c;
        }
    for (double& v : model.feat_std_) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v == 0.0) v = 1.0;
    }

    std::vector<std::vector<double>> X(n);
    for (std::size_t s = 0; s < n; ++s) {
        X[s].resize(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            X[s][static_cast<std::size_t>(i)] =
                (features[s][static_cast<std::size_t>(i)] - model.feat_mean_[static_cast<std::size_t>(i)]) /
                model.feat_std_[static_cast<std::size_t>(i)];
    }

    const int h = config.hidden;
    Rng rng(derive_seed(seed, "auditor_init"));
    auto init = [&](std::vector<double>& w, int fan_in, std::size_t count) {
        w.resize(count);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : w) v = rng.uniform(-bound, bound);
    };
    init(model.w1_, d, static_cast<std::size_t>(h) * d);
    init(model.b1_, d, static_cast<std::size_t>(h));
    init(model.w2_, h, static_cast<std::size_t>(h) * h);
    init(model.b2_, h, static_cast<std::size_t>(h));
    init(model.w3_, h, static_cast<std::size_t>(h));
    init(model.b3_, h, 1);

    AdamStateD s_w1(model.w1_.size()), s_b1(model.b1_.size()), s_w2(model.w2_.size()),
        s_b2(model.b2_.size()), s_w3(model.w3_.size()), s_b3(model.b3_.size());

    std::vector<double> a1(static_cast<std::size_t>(h)), a2(static_cast<std::size_t>(h));
    std::vector<double> g_w1(model.w1_.size()), g_b1(model.b1_.size()),
        g_w2(model.w2_.size()), g_b2(model.b2_.size()), g_w3(model.w3_.size()),
        g_b3(model.b3_.size());
    std::vector<std::vector<double>> h1(n, std::vector<double>(static_cast<std::size_t>(h))),
        h2(n, std::vector<double>(static_cast<std::size_t>(h)));
    std::vector<double> probs(n);

    double loss = 0.0;
    long t = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(g_w1.begin(), g_w1.end(), 0.0);
        std::fill(g_b1.begin(), g_b1.end(), 0.0);
        std::fill(g_w2.begin(), g_w2.end(), 0.0);
        std::fill(g_b2.begin(), g_b2.end(), 0.0);
        std::fill(g_w3.begin(), g_w3.end(), 0.0);
        std::fill(g_b3.begin(), g_b3.end(), 0.0);
        loss = 0.0;

        for (std::size_t s = 0; s < n; ++s) {
            // forward
            for (int i = 0; i < h; ++i) {
                double z = model.b1_[static_cast<std::size_t>(i)];
                for (int j = 0; j < d; ++j)
                    z += model.w1_[static_cast<std::size_t>(i) * d + j] * X[s][static_cast<std::size_t>(j)];
                h1[s][static_cast<std::size_t>(i)] = z > 0.0 ? z : 0.0;
            }
            for (int i = 0; i < h; ++i) {
                double z = model.b2_[static_cast<std::size_t>(i)];
                for (int j = 0; j < h; ++j)
                    z += model.w2_[static_cast<std::size_t>(i) * h + j] * h1[s][static_cast<std::size_t>(j)];
                h2[s][static_cast<std::size_t>(i)] = z > 0.0 ? z : 0.0;
            }
            double z3 = model.b3_[0];
            for (int j = 0; j < h; ++j) z3 += model.w3_[static_cast<std::size_t>(j)] * h2[s][static_cast<std::size_t>(j)];
            const double y = static_cast<double>(labels[s]);
            loss += std::max(z3, 0.0) - z3 * y + std::log1p(std::exp(-std::abs(z3)));
            probs[s] = sigmoid(z3);

            // backward
            const double dz3 = (probs[s] - y) / static_cast<double>(n);
            g_b3[0] += dz3;
            for (int j = 0; j < h; ++j) {
                g_w3[static_cast<std::size_t>(j)] += dz3 * h2[s][static_cast<std::size_t>(j)];
                if (h2[s][static_cast<std::size_t>(j)] > 0.0) {
                    const double d2 = dz3 * model.w3_[static_cast<std::size_t>(j)];
                    g_b2[static_cast<std::size_t>(j)] += d2;
                    a2[static_cast<std::size_t>(j)] = d2;
                } else {
                    a2[static_cast<std::size_t>(j)] = 0.0;
                }
            }
            for (int i = 0; i < h; ++i) a1[static_cast<std::size_t>(i)] = 0.0;
            for (int i = 0; i < h; ++i) {
                if (a2[static_cast<std::size_t>(i)] == 0.0) continue;
                const double d2 = a2[static_cast<std::size_t>(i)];
                for (int j = 0; j < h; ++j) {
                    g_w2[static_cast<std::size_t>(i) * h + j] += d2 * h1[s][static_cast<std::size_t>(j)];
                    a1[static_cast<std::size_t>(j)] += d2 * model.w2_[static_cast<std::size_t>(i) * h + j];
                }
            }
            for (int i = 0; i < h; ++i) {
                if (h1[s][static_cast<std::size_t>(i)] <= 0.0 || a1[static_cast<std::size_t>(i)] == 0.0) continue;
                const double d1 = a1[static_cast<std::size_t>(i)];
                g_b1[static_cast<std::size_t>(i)] += d1;
                for (int j = 0; j < d; ++j)
                    g_w1[static_cast<std::size_t>(i) * d + j] += d1 * X[s][static_cast<std::size_t>(j)];
            }
        }
        loss /= static_cast<double>(n);
        ++t;
        s_w1.update(model.w1_, g_w1, config.lr, t);
        s_b1.update(model.b1_, g_b1, config.lr, t);
        s_w2.update(model.w2_, g_w2, config.lr, t);
        s_b2.update(model.b2_, g_b2, config.lr, t);
        s_w3.update(model.w3_, g_w3, config.lr, t);
        s_b3.update(model.b3_, g_b3, config.lr, t);
    }
    model.final_loss_ = loss;
    return model;
}

std::vector<double> AuditorModel::standardized(const std::vector<double>& feature) const {
    if (static_cast<int>(feature.size()) != layout_.input_dim)
        throw ShapeError("auditor predict: feature length " +
                         std::to_string(feature.size()) + " does not match layout " +
                         std::to_string(layout_.input_dim));
    std::vector<double> x(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i)
        x[i] = (feature[i] - feat_mean_[i]) / feat_std_[i];
    return x;
}

double AuditorModel::predict_probability(const std::vector<double>& feature) const {
    const std::vector<double> x = standardized(feature);
    const int d = layout_.input_dim, h = hidden_;
    std::vector<double> h1(static_cast<std::size_t>(h)), h2(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        double z = b1_[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) z += w1_[static_cast<std::size_t>(i) * d + j] * x[static_cast<std::size_t>(j)];
        h1[static_cast<std::size_t>(i)] = z > 0.0 ? z : 0.0;
    }
    for (int i = 0; i < h; ++i) {
        double z = b2_[static_cast<std::size_t>(i)];
        for (int j = 0; j < h; ++j) z += w2_[static_cast<std::size_t>(i) * h + j] * h1[static_cast<std::size_t>(j)];
        h2[static_cast<std::size_t>(i)] = z > 0.0 ? z : 0.0;
    }
    double z3 = b3_[0];
    for (int j = 0; j < h; ++j) z3 += w3_[static_cast<std::size_t>(j)] * h2[static_cast<std::size_t>(j)];
    return sigmoid(z3);
}

std::pair<double, int> AuditorModel::predict(const std::vector<double>& feature) const {
    const double p = predict_probability(feature);
    return {p, p >= 0.5 ? 1 : 0};
}

void AuditorModel::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = "fsaudit-auditor-v1";
    j["layout"] = json{{"input_dim", layout_.input_dim},
                       {"queries", layout_.queries},
                       {"reference_on", layout_.reference_on},
                       {"metric", to_string(layout_.metric)}};
    j["hidden"] = hidden_;
    j["w1"] = w1_;
    j["b1"] = b1_;
    j["w2"] = w2_;
    j["b2"] = b2_;
    j["w3"] = w3_;
    j["b3"] = b3_;
    j["feat_mean"] = feat_mean_;
    j["feat_std"] = feat_std_;
    j["final_loss"] = final_loss_;
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write auditor checkpoint to " + path.string());
    out << j.dump();
}

AuditorModel AuditorModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot read auditor checkpoint from " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CheckpointError("corrupt auditor checkpoint: " + std::string(e.what()));
    }
    if (j.value("format", "") != "fsaudit-auditor-v1")
        throw CheckpointError("unrecognized auditor checkpoint format");
    AuditorModel m;
    m.layout_.input_dim = j.at("layout").at("input_dim").get<int>();
    m.layout_.queries = j.at("layout").at("queries").get<int>();
    m.layout_.reference_on = j.at("layout").at("reference_on").get<bool>();
    m.layout_.metric = parse_metric_tag(j.at("layout").at("metric").get<std::string>());
    m.hidden_ = j.at("hidden").get<int>();
    m.w1_ = j.at("w1").get<std::vector<double>>();
    m.b1_ = j.at("b1").get<std::vector<double>>();
    m.w2_ = j.at("w2").get<std::vector<double>>();
    m.b2_ = j.at("b2").get<std::vector<double>>();
    m.w3_ = j.at("w3").get<std::vector<double>>();
    m.b3_ = j.at("b3").get<std::vector<double>>();
    m.feat_mean_ = j.at("feat_mean").get<std::vector<double>>();
    m.feat_std_ = j.at("feat_std").get<std::vector<double>>();
    m.final_loss_ = j.at("final_loss").get<double>();
    return m;
}

// ---------------------------------------------------------------------------
// Evaluation metrics
// ---------------------------------------------------------------------------

EvalMetrics evaluate_predictions(const std::vector<double>& probabilities,
                                 const std::vector<int>& labels) {
    if (probabilities.size() != labels.size() || probabilities.empty())
        throw ConfigError("evaluate: size mismatch or empty input");
    long tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int pred = probabilities[i] >= 0.5 ? 1 : 0;
        if (labels[i] == 1 && pred == 1) ++tp;
        if (labels[i] == 0 && pred == 0) ++tn;
        if (labels[i] == 0 && pred == 1) ++fp;
        if (labels[i] == 1 && pred == 0) ++fn;
    }
    const long p = tp + fn, neg = fp + tn;
    if (p == 0 || neg == 0)
        throw ConfigError("evaluate: AUC undefined on a single-class sample set");

    EvalMetrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
    m.fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(p);
    m.f1 = (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);

    // Mann-Whitney AUC with midranks for ties.
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return probabilities[a] < probabilities[b];
    });
    std::vector<double> rank(labels.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               probabilities[order[j + 1]] == probabilities[order[i]])
            ++j;
        const double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t s = 0; s < labels.size(); ++s)
        if (labels[s] == 1) rank_sum_pos += rank[s];
    m.auc = (rank_sum_pos - static_cast<double>(p) * (static_cast<double>(p) + 1.0) / 2.0) /
            (static_cast<double>(p) * static_cast<double>(neg));
    return m;
}

EvalMetrics evaluate_auditor(const AuditorModel& auditor,
                             const std::vector<AuditSample>& samples) {
    std::vector<double> probs;
    std::vector<int> labels;
    for (const auto& s : samples) {
        probs.push_back(auditor.predict_probability(s.feature.flat()));
        labels.push_back(s.label);
    }
    return evaluate_predictions(probs, labels);
}

namespace {

EvalMetrics aggregate(const std::vector<EvalMetrics>& runs, bool want_std) {
    EvalMetrics mean;
    for (const auto& r : runs) {
        mean.accuracy += r.accuracy;
        mean.auc += r.auc;
        mean.f1 += r.f1;
        mean.fpr += r.fpr;
    }
    const double n = static_cast<double>(runs.size());
    mean.accuracy /= n;
    mean.auc /= n;
    mean.f1 /= n;
    mean.fpr /= n;
    if (!want_std) return mean;
    EvalMetrics sd;
    for (const auto& r : runs) {
        sd.accuracy += (r.accuracy - mean.accuracy) * (r.accuracy - mean.accuracy);
        sd.auc += (r.auc - mean.auc) * (r.auc - mean.auc);
        sd.f1 += (r.f1 - mean.f1) * (r.f1 - mean.f1);
        sd.fpr += (r.fpr - mean.fpr) * (r.fpr - mean.fpr);
    }
    sd.accuracy = std::sqrt(sd.accuracy / n);
    sd.auc = std::sqrt(sd.auc / n);
    sd.f1 = std::sqrt(sd.f1 / n);
    sd.fpr = std::sqrt(sd.fpr / n);
    return sd;
}

}  // namespace

EvalMetrics EvalReport::mean() const {
    if (runs.empty()) throw ConfigError("EvalReport: no runs");
    return aggregate(runs, false);
}

EvalMetrics EvalReport::stddev() const {
    if (runs.empty()) throw ConfigError("EvalReport: no runs");
    return aggregate(runs, true);
}

std::pair<double, double> li_baseline_features(
    const std::vector<std::vector<double>>& embeddings) {
    const std::size_t n = embeddings.size();
    if (n < 2) throw ConfigError("li_baseline_features: need at least 2 images");
    const std::size_t d = embeddings.front().size();
    std::vector<double> centroid(d, 0.0);
    for (const auto& e : embeddings)
        for (std::size_t i = 0; i < d; ++i) centroid[i] += e[i];
    for (double& v : centroid) v /= static_cast<double>(n);

    double c_u = 0.0;
    for (const auto& e : embeddings) {
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = e[i] - centroid[i];
            sq += diff * diff;
        }
        c_u += std::sqrt(sq);
    }
    c_u /= static_cast<double>(n);

    double p_u = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double sq = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = embeddings[a][i] - embeddings[b][i];
                sq += diff * diff;
            }
            p_u += std::sqrt(sq);
            ++pairs;
        }
    }
    p_u /= static_cast<double>(pairs);
    return {c_u, p_u};
}

}  // namespace fsaudit
