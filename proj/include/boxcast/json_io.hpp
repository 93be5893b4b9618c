#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "boxcast/backends.hpp"
#include "boxcast/box.hpp"
#include "boxcast/normalizer.hpp"
#include "boxcast/quantizer.hpp"

namespace boxcast {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

/// {"dims":[..],"center":[..],"euler_zyx":[yaw,pitch,roll]}
Json to_json(const BoxParams& box);
BoxParams box_from_json(const Json& j);

Json to_json(const Normalizer& n);
Normalizer normalizer_from_json(const Json& j);

Json to_json(const Quantizer& q);
Quantizer quantizer_from_json(const Json& j);

Json to_json(const BoxSpace& s);
BoxSpace space_from_json(const Json& j);

/// Versioned model file: a header (schema_version, backend, space,
/// num_contexts) and a backend-specific body. Supported backends:
/// tabular, gaussian, ordered. Doubles are written in shortest round-trip
/// form, so probabilities reload bit-exactly.
Json model_to_json(const BoxDistribution& d);
DistributionPtr model_from_json(const Json& j);

void save_model(const BoxDistribution& d, const std::filesystem::path& path);
DistributionPtr load_model(const std::filesystem::path& path);

/// Throws Error unless j["schema_version"] equals kSchemaVersion.
void check_schema(const Json& j, const std::string& what);

Json read_json_file(const std::filesystem::path& path);
/// Writes to a temporary sibling, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace boxcast
