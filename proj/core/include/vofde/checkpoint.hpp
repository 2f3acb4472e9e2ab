#pragma once

#include <string>
#include <string_view>

#include "vofde/order_model.hpp"
#include "vofde/tape.hpp"

namespace vofde::io {

// {"name": {"shape": [...], "data": [...]}, ...}
std::string params_to_json(const ad::ParamStore& store);
ad::ParamStore params_from_json(std::string_view text);

void save_params(const std::string& path, const ad::ParamStore& store);
ad::ParamStore load_params(const std::string& path);

// {"kind": ..., "floor": ..., "value": ..., "knot_times": [...],
//  "state_width": ..., "embed_dim": ..., "hidden": ..., "t_max": ..., "params": {...}}
std::string order_model_to_json(const order::OrderModel& model);
order::OrderModel order_model_from_json(std::string_view text);

}  // namespace vofde::io
