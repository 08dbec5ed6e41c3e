#include "yowo/harness/checkpoint.hpp"

#include <stdexcept>

#include "json.hpp"
#include "yowo/harness/io.hpp"

namespace yowo::harness {

using nlohmann::json;

namespace {

json model_config_json(const model::ModelConfig& c) {
    return {{"c_o1", c.c_o1},
            {"c_o2", c.c_o2},
            {"c_o3", c.c_o3},
            {"num_classes", c.num_classes},
            {"clip_length", c.clip_length},
            {"head", model::to_string(c.head)},
            {"backbone_width", c.backbone_width},
            {"init", model::to_string(c.init)}};
}

model::ModelConfig model_config_from(const json& j) {
    model::ModelConfig c;
    c.c_o1 = j.at("c_o1").get<int>();
    c.c_o2 = j.at("c_o2").get<int>();
    c.c_o3 = j.at("c_o3").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.clip_length = j.at("clip_length").get<int>();
    c.head = model::head_variant_from_string(j.at("head").get<std::string>());
    c.backbone_width = j.at("backbone_width").get<int>();
    c.init = model::init_scheme_from_string(j.at("init").get<std::string>());
    return c;
}

}  // namespace

std::string checkpoint_to_json(const model::YowoModel& model) {
    json tensors = json::object();
    model.for_each_layer([&](const std::string& name, const numeric::ConvLayer& L) {
        tensors[name + ".weights"] = {{"shape", {L.kernel, L.kernel, L.in_channels, L.out_channels}}, {"values", L.weights}};
        tensors[name + ".bias"] = {{"shape", {L.out_channels}}, {"values", L.bias}};
        if (L.affine) {
            tensors[name + ".scale"] = {{"shape", {L.out_channels}}, {"values", L.scale}};
            tensors[name + ".shift"] = {{"shape", {L.out_channels}}, {"values", L.shift}};
        }
    });
    json j{{"format", kCheckpointFormat},
           {"version", kCheckpointVersion},
           {"model", model_config_json(model.config())},
           {"tensors", tensors}};
    return j.dump();
}

model::YowoModel checkpoint_from_json(const std::string& text) {
    const auto j = json::parse(text);
    if (j.value("format", "") != kCheckpointFormat) throw std::runtime_error("checkpoint: not a yowo-toy-checkpoint file");
    if (j.value("version", 0) != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));
    model::YowoModel model(model_config_from(j.at("model")), 0);
    const auto& tensors = j.at("tensors");
    std::size_t used = 0;
    const auto fill = [&](const std::string& key, const std::vector<int>& shape, std::vector<double>& dst) {
        if (!tensors.contains(key)) throw std::runtime_error("checkpoint: missing tensor '" + key + "'");
        const auto& t = tensors.at(key);
        if (t.at("shape").get<std::vector<int>>() != shape)
            throw std::runtime_error("checkpoint: shape mismatch for '" + key + "'");
        auto values = t.at("values").get<std::vector<double>>();
        if (values.size() != dst.size()) throw std::runtime_error("checkpoint: value count mismatch for '" + key + "'");
        dst = std::move(values);
        ++used;
    };
    model.visit_layers([&](const std::string& name, numeric::ConvLayer& L) {
        fill(name + ".weights", {L.kernel, L.kernel, L.in_channels, L.out_channels}, L.weights);
        fill(name + ".bias", {L.out_channels}, L.bias);
        if (L.affine) {
            fill(name + ".scale", {L.out_channels}, L.scale);
            fill(name + ".shift", {L.out_channels}, L.shift);
        }
    });
    if (used != tensors.size()) throw std::runtime_error("checkpoint: file holds tensors the model does not have");
    return model;
}

void save_checkpoint(const model::YowoModel& model, const std::string& path) {
    write_file(path, checkpoint_to_json(model));
}

model::YowoModel load_checkpoint(const std::string& path) { return checkpoint_from_json(read_file(path)); }

bool same_parameters(const model::YowoModel& a, const model::YowoModel& b) {
    if (!(a.config() == b.config())) return false;
    std::vector<const numeric::ConvLayer*> la, lb;
    a.for_each_layer([&](const std::string&, const numeric::ConvLayer& L) { la.push_back(&L); });
    b.for_each_layer([&](const std::string&, const numeric::ConvLayer& L) { lb.push_back(&L); });
    if (la.size() != lb.size()) return false;
    for (std::size_t i = 0; i < la.size(); ++i)
        if (la[i]->weights != lb[i]->weights || la[i]->bias != lb[i]->bias || la[i]->scale != lb[i]->scale ||
            la[i]->shift != lb[i]->shift)
            return false;
    return true;
}

}  // namespace yowo::harness
