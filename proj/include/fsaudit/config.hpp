#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fsaudit/dataset.hpp"

namespace fsaudit {

struct DatasetSpec {
    std::string kind = "synthetic";  // synthetic | folder
    std::string name = "synthetic";  // label used in reports
    SyntheticSpec synthetic;
    std::string root;  // folder mode
    int min_images = 100;
    int keep = 100;
};

// Defense axes for the robustness suite.
struct DefenseSuite {
    std::vector<std::string> cloak_levels;
    std::vector<std::string> dp_levels;
    std::vector<double> output_noise_deltas{0.01, 0.05, 0.1, 0.2, 0.5};
    bool memguard = true;
    double memguard_margin = 1e-3;
};

// The defense active for one run variant (none for the baseline).
struct DefenseVariant {
    std::string kind = "none";  // none | cloak | dp | output_noise | memguard
    std::string level;          // cloak/dp preset level
    double delta = 0.0;         // output noise stddev
    double margin = 1e-3;       // memguard margin

    std::string label() const;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    int image_size = 96;
    std::vector<std::string> architectures{"siamese", "proto", "relation"};
    std::string extractor = "simple_cnn";
    int channels = 64;
    int embedding_dim = 64;
    int ways = 5;
    int shots = 5;
    int queries = 5;
    std::string query_strategy = "random";
    std::string strategy_metric = "cossim";
    std::string reference_metric = "cossim";
    bool reference_enabled = true;
    int probes_per_user = 10;
    std::string siamese_aggregation = "mean";

    int epochs = 30;
    int episodes_per_epoch = 100;
    double lr_adam = 1e-3;
    double lr_sgd = 1e-2;
    int scheduler_step = 20;
    double scheduler_gamma = 0.5;

    int auditor_hidden = 100;
    int auditor_epochs = 200;
    double auditor_lr = 1e-3;

    int eval_episodes = 500;
    int repetitions = 10;
    std::uint64_t master_seed = 42;

    bool run_li_baseline = true;
    bool run_reference_ablation = true;

    DefenseSuite defenses;
    DefenseVariant active_defense;

    std::string out_dir = "out";
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

// Applies a `key=value` override with dotted paths (e.g. train not needed:
// "epochs=5", "dataset.users=40", "architectures=[\"proto\"]"). Values parse
// as JSON when possible, else as strings.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Small desk-scale preset used by examples and smoke runs.
ExperimentConfig desk_scale_config();

}  // namespace fsaudit
