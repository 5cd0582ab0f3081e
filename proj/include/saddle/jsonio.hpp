#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace saddle {

/// Serializes JSON with floating-point numbers printed as %.17g decimals.
std::string dump_json17(const nlohmann::json& j, int indent = 2);

}  // namespace saddle
