// fsaudit: train metric-based few-shot face recognizers, probe them, and
// classify whether a target user's images were part of their training data.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsaudit/report.hpp"

using namespace fsaudit;
using nlohmann::json;

namespace {

json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
    json j;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path);
        in >> j;
    } else {
        j = to_json(desk_scale_config());
    }
    for (const auto& assignment : overrides) apply_override(j, assignment);
    return j;
}

ExperimentConfig resolve_config(const json& j) {
    ExperimentConfig config = config_from_json(j);
    if (config.dataset.kind == "folder" && !config.dataset.root.empty() &&
        config.dataset.root.front() != '/') {
        if (const char* root = std::getenv("FSAUDIT_DATA_ROOT"))
            config.dataset.root = std::string(root) + "/" + config.dataset.root;
    }
    return config;
}

void write_outputs(const std::vector<ResultRecord>& records, const std::string& out_dir) {
    emit_report(records, "jsonl", out_dir);
    emit_report(records, "table", out_dir);
    emit_report(records, "plot", out_dir);
    std::cout << "wrote " << records.size() << " records to " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fsaudit: user-level membership auditing for few-shot face recognizers"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", records_path, axis, mode = "dataset";
    std::vector<std::string> overrides, value_strings;
    bool verbose = false;
    int replay_index = -1;
    double tolerance = 1e-9;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON file");
        cmd->add_option("--set", overrides, "config overrides key=value (dotted paths)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_flag("--verbose", verbose, "log pipeline progress to stderr");
    };

    CLI::App* audit = app.add_subcommand("audit", "end-to-end audit run");
    add_common(audit);

    CLI::App* transfer = app.add_subcommand("transfer", "dataset or model transfer matrix");
    add_common(transfer);
    transfer->add_option("--mode", mode, "dataset | model")->check(
        CLI::IsMember({"dataset", "model"}));

    CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter sweep");
    add_common(sweep);
    sweep->add_option("--axis", axis, "ways|shots|queries|image_size|extractor")->required();
    sweep->add_option("--values", value_strings, "axis values")->required();

    CLI::App* robustness = app.add_subcommand("robustness", "defense robustness suite");
    add_common(robustness);

    CLI::App* report = app.add_subcommand("report", "re-emit tables/plots from records");
    report->add_option("--records", records_path, "records.jsonl file")->required();
    report->add_option("--out", out_dir, "output directory");

    CLI::App* replay = app.add_subcommand("replay", "re-run records from embedded configs");
    replay->add_option("--records", records_path, "records.jsonl file")->required();
    replay->add_option("--index", replay_index, "only this record (default: all)");
    replay->add_option("--tolerance", tolerance, "metric comparison tolerance");
    replay->add_flag("--verbose", verbose, "log pipeline progress to stderr");

    CLI::App* synth = app.add_subcommand("synth", "write a synthetic corpus to disk");
    int synth_users = 40, synth_images = 20, synth_size = 32;
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", out_dir, "corpus directory")->required();
    synth->add_option("--users", synth_users, "identities");
    synth->add_option("--images", synth_images, "images per identity");
    synth->add_option("--size", synth_size, "image size");
    synth->add_option("--seed", synth_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);
    set_runner_verbose(verbose);

    try {
        if (*audit) {
            const json j = load_config_json(config_path, overrides);
            const ExperimentConfig config = resolve_config(j);
            write_outputs(run_audit(config), out_dir);
        } else if (*transfer) {
            const json j = load_config_json(config_path, overrides);
            const ExperimentConfig config = resolve_config(j);
            std::vector<TransferCell> cells;
            if (mode == "model") {
                cells = run_model_transfer(config);
            } else {
                if (!j.contains("transfer_datasets"))
                    throw ConfigError("dataset transfer needs a transfer_datasets array "
                                      "in the config");
                std::vector<DatasetSpec> datasets;
                for (const auto& spec : j.at("transfer_datasets")) {
                    json one = to_json(config);
                    one["dataset"] = spec;
                    datasets.push_back(config_from_json(one).dataset);
                }
                cells = run_dataset_transfer(config, datasets);
            }
            std::vector<ResultRecord> records;
            for (auto& cell : cells) records.push_back(std::move(cell.record));
            write_outputs(records, out_dir);
        } else if (*sweep) {
            const json j = load_config_json(config_path, overrides);
            const ExperimentConfig config = resolve_config(j);
            std::vector<json> values;
            for (const auto& v : value_strings) {
                try {
                    values.push_back(json::parse(v));
                } catch (const json::exception&) {
                    values.push_back(v);
                }
            }
            const auto entries = run_sweep(config, axis, values);
            std::vector<ResultRecord> records;
            for (const auto& entry : entries) {
                if (!entry.error.empty()) {
                    std::cerr << "sweep value " << entry.value.dump()
                              << " failed: " << entry.error << "\n";
                    continue;
                }
                for (const auto& rec : entry.records) records.push_back(rec);
            }
            if (records.empty()) throw ConfigError("sweep produced no successful records");
            write_outputs(records, out_dir);
        } else if (*robustness) {
            const json j = load_config_json(config_path, overrides);
            const ExperimentConfig config = resolve_config(j);
            write_outputs(run_robustness(config), out_dir);
        } else if (*report) {
            std::vector<ResultRecord> records;
            for (const auto& j : load_jsonl(records_path))
                records.push_back(ResultRecord::from_json(j));
            emit_report(records, "table", out_dir);
            emit_report(records, "plot", out_dir);
            std::cout << "wrote report for " << records.size() << " records to " << out_dir
                      << "\n";
        } else if (*replay) {
            const auto records = load_jsonl(records_path);
            int failures = 0, checked = 0;
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (replay_index >= 0 && static_cast<int>(i) != replay_index) continue;
                std::string mismatch;
                const bool ok = replay_record(records[i], tolerance, &mismatch);
                std::cout << "record " << i << ": " << (ok ? "REPRODUCED" : "MISMATCH")
                          << (ok ? "" : " (" + mismatch + ")") << "\n";
                ++checked;
                if (!ok) ++failures;
            }
            if (checked == 0) throw ConfigError("no record matched the requested index");
            return failures == 0 ? 0 : 1;
        } else if (*synth) {
            SyntheticSpec spec;
            spec.users = synth_users;
            spec.images_per_user = synth_images;
            spec.size = synth_size;
            spec.seed = synth_seed;
            write_corpus(generate_synthetic(spec), out_dir);
            std::cout << "wrote " << synth_users << " identities to " << out_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
