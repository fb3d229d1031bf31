#pragma once

#include <string>

#include "json.hpp"
#include "lorentz/kernels.hpp"
#include "lorentz/scatterers.hpp"
#include "lorentz/scattering.hpp"

namespace lorentz {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// JSON round trips. Parsers throw ConfigError naming the offending field.
ScattererConfig scatterer_config_from_json(const Json& j);
Json to_json(const ScattererConfig& config);

ScatteringMap scattering_map_from_json(const Json& j);
Json to_json(const ScatteringMap& map);

KernelModel kernel_model_from_json(const Json& j);
Json to_json(const KernelModel& model);

// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string digest(const Json& j);

}  // namespace lorentz
