#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fsaudit/probe.hpp"

namespace fsaudit {

struct AuditSample {
    AuditFeature feature;
    int label = 0;  // member = 1, nonmember = 0
    std::string target_user_id;
    std::string provenance;  // e.g. "shadow:probe3" / "target:probe0"
    std::string manifest;    // replayable probe manifest
};

struct ProbingConfig {
    int ways = 5;
    int shots = 5;
    int queries = 5;
    QueryStrategy strategy;
    MetricTag reference_metric = MetricTag::cossim;
    bool reference_enabled = true;
    int probes_per_user = 10;
    SiameseAggregation aggregation = SiameseAggregation::mean;
};

// Balanced audit set: an equal number of member and nonmember users (the
// smaller cell caps both), probes_per_user probes each. Member probes use
// only the users' held-out (nontrain) images.
std::vector<AuditSample> build_audit_dataset(ModelScorer& scorer,
                                             const std::vector<IdentityRecord>& records,
                                             const SplitHalf& half,
                                             const ProbingConfig& config,
                                             std::uint64_t seed,
                                             PerceptualBackbone* backbone = nullptr);

// Three fully connected layers (hidden width 100 by default), sigmoid
// output. Double precision throughout; features are standardized with
// training-set statistics.
struct AuditorConfig {
    int hidden = 100;
    int epochs = 200;
    double lr = 1e-3;
};

class AuditorModel {
public:
    // Feature-layout descriptor; mismatched probes are rejected at predict.
    struct Layout {
        int input_dim = 0;
        int queries = 0;
        bool reference_on = false;
        MetricTag metric = MetricTag::cossim;
    };

    static AuditorModel train(const std::vector<AuditSample>& samples,
                              const AuditorConfig& config, std::uint64_t seed);
    static AuditorModel train_on_features(const std::vector<std::vector<double>>& features,
                                          const std::vector<int>& labels,
                                          const AuditorConfig& config, std::uint64_t seed,
                                          Layout layout);

    double predict_probability(const std::vector<double>& feature) const;
    // label = probability >= 0.5
    std::pair<double, int> predict(const std::vector<double>& feature) const;

    const Layout& layout() const { return layout_; }
    double final_loss() const { return final_loss_; }
    const std::vector<double>& feature_mean() const { return feat_mean_; }
    const std::vector<double>& feature_std() const { return feat_std_; }

    void save(const std::filesystem::path& path) const;
    static AuditorModel load(const std::filesystem::path& path);

private:
    Layout layout_;
    int hidden_ = 0;
    std::vector<double> w1_, b1_, w2_, b2_, w3_, b3_;
    std::vector<double> feat_mean_, feat_std_;
    double final_loss_ = 0.0;

    std::vector<double> standardized(const std::vector<double>& feature) const;
};

struct EvalMetrics {
    double accuracy = 0.0;
    double auc = 0.0;
    double f1 = 0.0;
    double fpr = 0.0;
};

// accuracy, rank-statistic AUC (midranks on ties), F1 on the member class,
// FPR = FP / (FP + TN). Throws on single-class sample sets.
EvalMetrics evaluate_auditor(const AuditorModel& auditor,
                             const std::vector<AuditSample>& samples);
EvalMetrics evaluate_predictions(const std::vector<double>& probabilities,
                                 const std::vector<int>& labels);

// Mean and standard deviation over repeated runs.
struct EvalReport {
    std::vector<EvalMetrics> runs;
    EvalMetrics mean() const;
    EvalMetrics stddev() const;
};

// Embedding-space baseline: mean distance to the centroid and mean pairwise
// distance of the target user's image embeddings (Euclidean).
std::pair<double, double> li_baseline_features(
    const std::vector<std::vector<double>>& embeddings);

}  // namespace fsaudit
