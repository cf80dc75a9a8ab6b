#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsaudit/auditor.hpp"
#include "fsaudit/checkpoint.hpp"
#include "fsaudit/config.hpp"
#include "fsaudit/train.hpp"

namespace fsaudit {

struct RepMetrics {
    int rep = 0;
    std::uint64_t rep_seed = 0;
    EvalMetrics face_auditor;
    std::optional<EvalMetrics> no_reference;
    std::optional<EvalMetrics> li_baseline;
    double target_train_acc = 0.0;
    double target_test_acc = 0.0;
    double overfitting = 0.0;
    double shadow_final_loss = 0.0;
    double target_final_loss = 0.0;
    int memguard_skipped = 0;
};

struct TransferInfo {
    std::string shadow_dataset, target_dataset;
    std::string shadow_arch, target_arch;
};

struct ResultRecord {
    ExperimentConfig config;  // snapshot; architectures reduced to the one run
    std::string architecture;
    DefenseVariant defense;
    std::optional<TransferInfo> transfer;
    std::vector<RepMetrics> per_run;
    double wall_clock_seconds = 0.0;

    EvalReport face_auditor_report() const;
    EvalReport no_reference_report() const;
    EvalReport li_baseline_report() const;
    double median_auc() const;
    double median_auc_no_reference() const;

    nlohmann::json to_json() const;
    static ResultRecord from_json(const nlohmann::json& j);
};

// Within-invocation cache so robustness/transfer runs can share trained
// models and cloaked corpora between variants. Reuse is purely an
// optimization: a fresh run with the same config reproduces the same values.
class RunCache {
public:
    std::shared_ptr<const std::vector<IdentityRecord>> dataset(const std::string& key);
    void put_dataset(const std::string& key,
                     std::shared_ptr<const std::vector<IdentityRecord>> records);
    std::shared_ptr<TrainedModel> model(const std::string& key);
    void put_model(const std::string& key, std::shared_ptr<TrainedModel> model);

private:
    std::map<std::string, std::shared_ptr<const std::vector<IdentityRecord>>> datasets_;
    std::map<std::string, std::shared_ptr<TrainedModel>> models_;
};

void set_runner_verbose(bool verbose);

// One architecture under one defense variant, over config.repetitions reps.
ResultRecord run_variant(const ExperimentConfig& config, const std::string& architecture,
                         const DefenseVariant& defense, RunCache* cache = nullptr);

// The full pipeline per architecture: split, shadow train, audit-set build,
// auditor train, target train, probe, evaluate.
std::vector<ResultRecord> run_audit(const ExperimentConfig& config,
                                    RunCache* cache = nullptr);

// Baseline plus every configured defense level with identical seeds.
std::vector<ResultRecord> run_robustness(const ExperimentConfig& config);

struct TransferCell {
    std::string row;  // shadow-side axis value
    std::string col;  // target-side axis value
    ResultRecord record;
};

std::vector<TransferCell> run_dataset_transfer(const ExperimentConfig& config,
                                               const std::vector<DatasetSpec>& datasets);

// Proto <-> Relation only; Siamese is rejected because its probing format
// does not match the episode-input models.
std::vector<TransferCell> run_model_transfer(const ExperimentConfig& config);

struct SweepEntry {
    nlohmann::json value;
    std::vector<ResultRecord> records;
    std::string error;  // non-empty when this value was infeasible
};

std::vector<SweepEntry> run_sweep(const ExperimentConfig& config, const std::string& axis,
                                  const std::vector<nlohmann::json>& values);

// Re-runs a record from its embedded config and compares every per-run
// metric within the tolerance. Returns true when everything matches.
bool replay_record(const nlohmann::json& record_json, double tolerance,
                   std::string* mismatch = nullptr);

}  // namespace fsaudit
