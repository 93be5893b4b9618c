#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "boxcast/json_io.hpp"

namespace boxcast::app {

/// Provenance written next to every output as <out>.manifest.json.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version;
  Json timings_ms = Json::object();
};

std::filesystem::path manifest_path(const std::filesystem::path& out);
Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);
void write_manifest(const std::filesystem::path& out, const RunManifest& m);

}  // namespace boxcast::app
