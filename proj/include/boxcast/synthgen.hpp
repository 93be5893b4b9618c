#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "boxcast/backends.hpp"
#include "boxcast/json_io.hpp"

namespace boxcast {

enum class ScenarioKind { stacked_bin, rot_symmetric, nested_ordered, unambiguous };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);

/// One ambiguity class. Boxes hang from a shared top face centered at
/// top_center (the visible surface); the latent variable is what the top
/// face cannot reveal.
///  stacked_bin:    heights dims.z / i for i = 1..levels.
///  nested_ordered: box j scales the height by ratios[j] and the footprint
///                  by footprint_ratios[j] (default 1), about the top face.
///  rot_symmetric:  square footprint; yaw drawn among yaw + j pi/2, or
///                  uniformly on the circle when symmetry == "circular".
///  unambiguous:    the box itself, dims and center jittered by U(-noise, noise).
struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::stacked_bin;
  /// Context id written to records; -1 means the scenario's list index.
  int context = -1;
  Vec3 dims{0.4, 0.3, 0.4};
  Vec3 top_center{0.0, 0.0, 0.5};
  double yaw = 0.0;
  int levels = 4;
  std::vector<double> ratios;
  std::vector<double> footprint_ratios;
  /// Per-class probabilities (levels, ratios, or the 4 quarter turns);
  /// empty means uniform.
  std::vector<double> probs;
  std::string symmetry = "square";
  double noise = 0.0;
  /// Optional SKU catalog copied into every record.
  std::vector<Vec3> skus;
  double weight = 1.0;

  void validate() const;
  int num_classes() const;
  std::vector<double> class_probs() const;
};

Json to_json(const ScenarioSpec& s);
ScenarioSpec scenario_from_json(const Json& j);

/// {"schema_version":1,"scenarios":[...]}
std::vector<ScenarioSpec> scenarios_from_json(const Json& j);

struct SceneRecord {
  std::string id;
  int context = 0;
  std::string scenario;
  ScenarioKind kind = ScenarioKind::stacked_bin;
  /// Class index drawn for the scene; -1 for continuous latents.
  int latent = -1;
  BoxParams gt;
  /// Stub of the visible top surface; lies on the gt box.
  std::vector<Vec3> points;
  std::vector<Vec3> skus;
};

/// Records drawn from the weighted scenario mixture. Record i uses its own
/// generator seeded by derive_seed(seed, i), so output is independent of
/// how work is split.
std::vector<SceneRecord> generate(std::span<const ScenarioSpec> specs, std::size_t n, std::uint64_t seed);
std::vector<SceneRecord> generate(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed);

/// The box of class `latent` (stacked_bin, nested_ordered, rot_symmetric).
BoxParams class_box(const ScenarioSpec& spec, int latent);

/// Exact generating distribution of an ordered scenario, innermost first.
/// Throws "no analytic form" for other kinds.
std::shared_ptr<const OrderedAnalytic> latent_distribution(const ScenarioSpec& spec, const BoxSpace& space = {});

Json to_json(const SceneRecord& r);
/// Validates the schema and that every point lies on the gt box.
SceneRecord record_from_json(const Json& j);

void write_jsonl(const std::filesystem::path& path, std::span<const SceneRecord> records);
std::vector<SceneRecord> read_jsonl(const std::filesystem::path& path);

}  // namespace boxcast
