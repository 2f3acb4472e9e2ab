#include "vofde/checkpoint.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vofde/csv.hpp"
#include "vofde/errors.hpp"

namespace vofde::io {

using nlohmann::json;

namespace {

json params_json(const ad::ParamStore& store) {
    json out = json::object();
    for (const auto& [name, tensor] : store) {
        out[name] = {{"shape", tensor.shape()}, {"data", tensor.values()}};
    }
    return out;
}

ad::ParamStore params_from(const json& j) {
    if (!j.is_object()) {
        throw FormatError("parameter checkpoint must be a JSON object");
    }
    ad::ParamStore store;
    for (const auto& [name, entry] : j.items()) {
        if (!entry.contains("shape") || !entry.contains("data")) {
            throw FormatError(fmt::format("parameter '{}' needs shape and data", name));
        }
        try {
            auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            auto data = entry.at("data").get<std::vector<double>>();
            store.set(name, ad::Tensor(std::move(shape), std::move(data)));
        } catch (const json::exception& e) {
            throw FormatError(fmt::format("parameter '{}': {}", name, e.what()));
        } catch (const ShapeError& e) {
            throw FormatError(fmt::format("parameter '{}': {}", name, e.what()));
        }
    }
    return store;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(fmt::format("invalid JSON: {}", e.what()));
    }
}

}  // namespace

std::string params_to_json(const ad::ParamStore& store) { return params_json(store).dump(2); }

ad::ParamStore params_from_json(std::string_view text) { return params_from(parse_json(text)); }

void save_params(const std::string& path, const ad::ParamStore& store) {
    csv::write_file(path, params_to_json(store) + "\n");
}

ad::ParamStore load_params(const std::string& path) {
    return params_from_json(csv::read_file(path));
}

std::string order_model_to_json(const order::OrderModel& model) {
    json j = {
        {"kind", order::to_string(model.kind())},
        {"floor", model.floor()},
        {"value", model.constant_value()},
        {"knot_times", model.knot_times()},
        {"state_width", model.state_width()},
        {"embed_dim", model.embed_dim()},
        {"hidden", model.hidden()},
        {"t_max", model.t_max()},
        {"params", params_json(model.params())},
    };
    return j.dump(2);
}

order::OrderModel order_model_from_json(std::string_view text) {
    const json j = parse_json(text);
    try {
        return order::OrderModel::from_parts(
            order::parse_order_kind(j.at("kind").get<std::string>()), j.at("floor").get<double>(),
            j.value("value", 1.0), j.value("knot_times", std::vector<double>{}),
            j.value("state_width", std::size_t{0}), j.value("embed_dim", std::size_t{0}),
            j.value("hidden", std::size_t{0}), j.value("t_max", 100.0),
            params_from(j.value("params", json::object())));
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("order model checkpoint: {}", e.what()));
    }
}

}  // namespace vofde::io
