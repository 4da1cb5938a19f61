#pragma once

#include <string>

#include <json.hpp>

#include "nbhj/hj_value.hpp"
#include "nbhj/minimize.hpp"
#include "nbhj/reference_path.hpp"

namespace nbhj {

using Json = nlohmann::json;

/// Parsed scenario file (schema_version 1, snake_case keys): the validated
/// spec, solver options, and a content hash for reproducibility metadata.
struct ScenarioFile {
  ScenarioSpec spec;
  MinimizeOptions minimize;
  std::string content_hash;  // FNV-1a 64 of the canonical JSON text
  Json raw;
};

ScenarioFile parse_scenario(const std::string& text);
ScenarioFile load_scenario(const std::string& path);

/// 64-bit FNV-1a, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

/// Deterministic serialization: nlohmann keeps object keys sorted and emits
/// shortest-round-trip doubles, so equal payloads give identical bytes.
void save_result(const std::string& path, const Json& bundle);

Json vec_json(const Vec& v);
Json bodies_json(const MassSystem& ms, const Vec& flat);  // nested per body
Vec parse_configuration(const MassSystem& ms, const Json& j, const std::string& field);

Json scenario_json(const ScenarioFile& sf);
Json central_config_json(const CentralConfigResult& cc);
Json minimize_result_json(const ScenarioSpec& spec, const MinimizeResult& mr);
Json value_result_json(const ValueResult& vr);

/// Grid slice description (for `scan`): center/e1/e2 configurations plus
/// s1/s2 ranges and counts.
GridSlice parse_slice(const MassSystem& ms, const Json& j);

}  // namespace nbhj
