#include "app/manifest.hpp"

namespace boxcast::app {

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

Json to_json(const RunManifest& m) {
  return {{"schema_version", kSchemaVersion},
          {"tool", "boxcast"},
          {"version", m.version},
          {"command", m.command},
          {"argv", m.argv},
          {"config", m.config},
          {"seed", m.seed},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"timings_ms", m.timings_ms}};
}

RunManifest manifest_from_json(const Json& j) {
  check_schema(j, "manifest");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = j.value("config", Json::object());
  m.seed = j.value("seed", std::uint64_t{0});
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.version = j.value("version", std::string());
  m.timings_ms = j.value("timings_ms", Json::object());
  return m;
}

void write_manifest(const std::filesystem::path& out, const RunManifest& m) {
  write_file_atomic(manifest_path(out), to_json(m).dump(2) + "\n");
}

}  // namespace boxcast::app
