#pragma once

#include "grvfl/models.hpp"

#include "json.hpp"

#include <filesystem>

namespace grvfl {

/// Version of the model container written by to_json. Readers reject others.
inline constexpr int kModelSchemaVersion = 1;

// Feature maps are stored as (inputs, hidden, activation, seed) and
// regenerated on load; output weights are row-major decimal arrays that
// round-trip exactly.

nlohmann::json to_json(const HyperParams& hyper);
HyperParams hyper_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FeatureMapSpec& spec);
FeatureMapSpec feature_map_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GrvflMvModel& model);
GrvflMvModel grvflmv_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RvflModel& model);
RvflModel rvfl_from_json(const nlohmann::json& j);

/// Parses a file into JSON; throws SchemaError on malformed text.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace grvfl
