#include "fsaudit/config.hpp"

#include <fstream>

#include "fsaudit/errors.hpp"
#include "fsaudit/metrics.hpp"
#include "fsaudit/models.hpp"
#include "fsaudit/probe.hpp"

namespace fsaudit {

using nlohmann::json;

std::string DefenseVariant::label() const {
    if (kind == "none") return "none";
    if (kind == "cloak" || kind == "dp") return kind + ":" + level;
    if (kind == "output_noise") {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "output_noise:%g", delta);
        return buf;
    }
    if (kind == "memguard") return "memguard";
    return kind;
}

namespace {

json dataset_to_json(const DatasetSpec& d) {
    json j;
    j["kind"] = d.kind;
    j["name"] = d.name;
    if (d.kind == "synthetic") {
        j["users"] = d.synthetic.users;
        j["images_per_user"] = d.synthetic.images_per_user;
        j["size"] = d.synthetic.size;
        j["seed"] = d.synthetic.seed;
        j["max_rotation"] = d.synthetic.max_rotation;
        j["max_translate"] = d.synthetic.max_translate;
        j["max_scale_jitter"] = d.synthetic.max_scale_jitter;
        j["noise_lo"] = d.synthetic.noise_lo;
        j["noise_hi"] = d.synthetic.noise_hi;
        j["brightness_jitter"] = d.synthetic.brightness_jitter;
        j["contrast_jitter"] = d.synthetic.contrast_jitter;
        j["texture_waves"] = d.synthetic.texture_waves;
    } else {
        j["root"] = d.root;
        j["min_images"] = d.min_images;
        j["keep"] = d.keep;
    }
    return j;
}

DatasetSpec dataset_from_json(const json& j) {
    DatasetSpec d;
    d.kind = j.value("kind", "synthetic");
    d.name = j.value("name", d.kind);
    if (d.kind == "synthetic") {
        d.synthetic.users = j.value("users", d.synthetic.users);
        d.synthetic.images_per_user = j.value("images_per_user", d.synthetic.images_per_user);
        d.synthetic.size = j.value("size", d.synthetic.size);
        d.synthetic.seed = j.value("seed", d.synthetic.seed);
        d.synthetic.max_rotation = j.value("max_rotation", d.synthetic.max_rotation);
        d.synthetic.max_translate = j.value("max_translate", d.synthetic.max_translate);
        d.synthetic.max_scale_jitter =
            j.value("max_scale_jitter", d.synthetic.max_scale_jitter);
        d.synthetic.noise_lo = j.value("noise_lo", d.synthetic.noise_lo);
        d.synthetic.noise_hi = j.value("noise_hi", d.synthetic.noise_hi);
        d.synthetic.brightness_jitter =
            j.value("brightness_jitter", d.synthetic.brightness_jitter);
        d.synthetic.contrast_jitter =
            j.value("contrast_jitter", d.synthetic.contrast_jitter);
        d.synthetic.texture_waves = j.value("texture_waves", d.synthetic.texture_waves);
    } else if (d.kind == "folder") {
        d.root = j.at("root").get<std::string>();
        d.min_images = j.value("min_images", 100);
        d.keep = j.value("keep", 100);
    } else {
        throw ConfigError("unknown dataset kind '" + d.kind + "'");
    }
    return d;
}

json defense_variant_to_json(const DefenseVariant& v) {
    return json{{"kind", v.kind}, {"level", v.level}, {"delta", v.delta},
                {"margin", v.margin}};
}

DefenseVariant defense_variant_from_json(const json& j) {
    DefenseVariant v;
    v.kind = j.value("kind", "none");
    v.level = j.value("level", "");
    v.delta = j.value("delta", 0.0);
    v.margin = j.value("margin", 1e-3);
    return v;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = dataset_to_json(c.dataset);
    j["image_size"] = c.image_size;
    j["architectures"] = c.architectures;
    j["extractor"] = c.extractor;
    j["channels"] = c.channels;
    j["embedding_dim"] = c.embedding_dim;
    j["ways"] = c.ways;
    j["shots"] = c.shots;
    j["queries"] = c.queries;
    j["query_strategy"] = c.query_strategy;
    j["strategy_metric"] = c.strategy_metric;
    j["reference_metric"] = c.reference_metric;
    j["reference_enabled"] = c.reference_enabled;
    j["probes_per_user"] = c.probes_per_user;
    j["siamese_aggregation"] = c.siamese_aggregation;
    j["epochs"] = c.epochs;
    j["episodes_per_epoch"] = c.episodes_per_epoch;
    j["lr_adam"] = c.lr_adam;
    j["lr_sgd"] = c.lr_sgd;
    j["scheduler_step"] = c.scheduler_step;
    j["scheduler_gamma"] = c.scheduler_gamma;
    j["auditor_hidden"] = c.auditor_hidden;
    j["auditor_epochs"] = c.auditor_epochs;
    j["auditor_lr"] = c.auditor_lr;
    j["eval_episodes"] = c.eval_episodes;
    j["repetitions"] = c.repetitions;
    j["master_seed"] = c.master_seed;
    j["run_li_baseline"] = c.run_li_baseline;
    j["run_reference_ablation"] = c.run_reference_ablation;
    j["defenses"] = json{{"cloak_levels", c.defenses.cloak_levels},
                         {"dp_levels", c.defenses.dp_levels},
                         {"output_noise_deltas", c.defenses.output_noise_deltas},
                         {"memguard", c.defenses.memguard},
                         {"memguard_margin", c.defenses.memguard_margin}};
    j["active_defense"] = defense_variant_to_json(c.active_defense);
    j["out_dir"] = c.out_dir;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
    c.image_size = j.value("image_size", c.image_size);
    c.architectures = j.value("architectures", c.architectures);
    c.extractor = j.value("extractor", c.extractor);
    c.channels = j.value("channels", c.channels);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.ways = j.value("ways", c.ways);
    c.shots = j.value("shots", c.shots);
    c.queries = j.value("queries", c.queries);
    c.query_strategy = j.value("query_strategy", c.query_strategy);
    c.strategy_metric = j.value("strategy_metric", c.strategy_metric);
    c.reference_metric = j.value("reference_metric", c.reference_metric);
    c.reference_enabled = j.value("reference_enabled", c.reference_enabled);
    c.probes_per_user = j.value("probes_per_user", c.probes_per_user);
    c.siamese_aggregation = j.value("siamese_aggregation", c.siamese_aggregation);
    c.epochs = j.value("epochs", c.epochs);
    c.episodes_per_epoch = j.value("episodes_per_epoch", c.episodes_per_epoch);
    c.lr_adam = j.value("lr_adam", c.lr_adam);
    c.lr_sgd = j.value("lr_sgd", c.lr_sgd);
    c.scheduler_step = j.value("scheduler_step", c.scheduler_step);
    c.scheduler_gamma = j.value("scheduler_gamma", c.scheduler_gamma);
    c.auditor_hidden = j.value("auditor_hidden", c.auditor_hidden);
    c.auditor_epochs = j.value("auditor_epochs", c.auditor_epochs);
    c.auditor_lr = j.value("auditor_lr", c.auditor_lr);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.run_li_baseline = j.value("run_li_baseline", c.run_li_baseline);
    c.run_reference_ablation = j.value("run_reference_ablation", c.run_reference_ablation);
    if (j.contains("defenses")) {
        const json& d = j.at("defenses");
        c.defenses.cloak_levels = d.value("cloak_levels", c.defenses.cloak_levels);
        c.defenses.dp_levels = d.value("dp_levels", c.defenses.dp_levels);
        c.defenses.output_noise_deltas =
            d.value("output_noise_deltas", c.defenses.output_noise_deltas);
        c.defenses.memguard = d.value("memguard", c.defenses.memguard);
        c.defenses.memguard_margin = d.value("memguard_margin", c.defenses.memguard_margin);
    }
    if (j.contains("active_defense"))
        c.active_defense = defense_variant_from_json(j.at("active_defense"));
    c.out_dir = j.value("out_dir", c.out_dir);

    // validate tags and counts early
    if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    for (const auto& a : c.architectures) parse_model_kind(a);
    parse_extractor_tag(c.extractor);
    parse_metric_tag(c.reference_metric);
    parse_metric_tag(c.strategy_metric);
    parse_strategy_tag(c.query_strategy);
    if (c.siamese_aggregation != "mean" && c.siamese_aggregation != "max")
        throw ConfigError("siamese_aggregation must be mean or max");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path);
    out << to_json(config).dump(2) << "\n";
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos
                                                       ? std::string::npos
                                                       : dot - start);
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::exception&) {
                parsed = value;  // plain string
            }
            (*node)[part] = parsed;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

ExperimentConfig desk_scale_config() {
    ExperimentConfig c;
    c.dataset.kind = "synthetic";
    c.dataset.name = "synthetic";
    c.dataset.synthetic.users = 40;
    c.dataset.synthetic.images_per_user = 20;
    c.dataset.synthetic.size = 32;
    c.dataset.synthetic.seed = 7;
    c.image_size = 32;
    c.channels = 16;
    c.embedding_dim = 64;
    c.epochs = 8;
    c.episodes_per_epoch = 60;
    c.eval_episodes = 100;
    c.repetitions = 5;
    c.probes_per_user = 20;
    c.master_seed = 20230811;
    return c;
}

}  // namespace fsaudit
