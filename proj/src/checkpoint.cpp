#include "fsaudit/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "fsaudit/errors.hpp"
#include "fsaudit/serial.hpp"

namespace fsaudit {

using nlohmann::json;

namespace {

json extractor_to_json(const ExtractorConfig& c) {
    return json{{"tag", to_string(c.tag)},
                {"channels", c.channels},
                {"image_size", c.image_size},
                {"batch_norm", c.batch_norm},
                {"head", c.head == EmbedHead::global_avg ? "global_avg" : "flatten_linear"},
                {"embedding_dim", c.embedding_dim}};
}

ExtractorConfig extractor_from_json(const json& j) {
    ExtractorConfig c;
    c.tag = parse_extractor_tag(j.at("tag").get<std::string>());
    c.channels = j.at("channels").get<int>();
    c.image_size = j.at("image_size").get<int>();
    c.batch_norm = j.at("batch_norm").get<bool>();
    c.head = j.at("head").get<std::string>() == "global_avg" ? EmbedHead::global_avg
                                                             : EmbedHead::flatten_linear;
    c.embedding_dim = j.at("embedding_dim").get<int>();
    return c;
}

}  // namespace

void save_model(FewShotModel& model, const std::filesystem::path& path) {
    json j;
    j["format"] = "fsaudit-model-v1";
    j["kind"] = to_string(model.kind());
    j["extractor"] = extractor_to_json(model.config().extractor);
    j["relation_hidden"] = model.config().relation_hidden;
    j["siamese_aggregation"] =
        model.config().siamese_aggregation == SiameseAggregation::max ? "max" : "mean";
    j["init_seed"] = model.init_seed();
    j["loss_history"] = model.loss_history();

    json params = json::object();
    for (Param* p : model.parameters()) {
        params[p->name] = json{{"shape", p->shape}, {"data", base64_encode(p->value)}};
    }
    j["params"] = std::move(params);

    json state = json::object();
    for (auto& [name, values] : model.state()) state[name] = *values;
    j["state"] = std::move(state);

    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write checkpoint to " + path.string());
    out << j.dump();
}

std::unique_ptr<FewShotModel> load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot read checkpoint from " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "fsaudit-model-v1")
        throw CheckpointError("unrecognized checkpoint format in " + path.string());

    ModelConfig config;
    config.kind = parse_model_kind(j.at("kind").get<std::string>());
    config.extractor = extractor_from_json(j.at("extractor"));
    config.relation_hidden = j.at("relation_hidden").get<int>();
    config.siamese_aggregation = j.at("siamese_aggregation").get<std::string>() == "max"
                                     ? SiameseAggregation::max
                                     : SiameseAggregation::mean;

    auto model = make_model(config, j.at("init_seed").get<std::uint64_t>());
    model->loss_history() = j.at("loss_history").get<std::vector<double>>();

    const json& params = j.at("params");
    for (Param* p : model->parameters()) {
        auto it = params.find(p->name);
        if (it == params.end())
            throw CheckpointError("checkpoint missing parameter '" + p->name + "'");
        std::vector<float> values = base64_decode_floats(it->at("data").get<std::string>());
        if (values.size() != p->count())
            throw CheckpointError("checkpoint parameter '" + p->name + "' has wrong size");
        p->value = std::move(values);
    }
    const json& state = j.at("state");
    for (auto& [name, values] : model->state()) {
        auto it = state.find(name);
        if (it == state.end())
            throw CheckpointError("checkpoint missing state '" + name + "'");
        *values = it->get<std::vector<double>>();
    }
    return model;
}

std::unique_ptr<FewShotModel> load_model(const std::filesystem::path& path,
                                         ModelKind expected) {
    auto model = load_model(path);
    if (model->kind() != expected)
        throw CheckpointError("checkpoint " + path.string() + " holds a " +
                              to_string(model->kind()) + " model, expected " +
                              to_string(expected));
    return model;
}

}  // namespace fsaudit
