#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boxcast/fit.hpp"
#include "boxcast/inference.hpp"
#include "boxcast/synthgen.hpp"

namespace boxcast::app {

/// Parses and runs one command line. args[0] is the program name.
/// Returns the process exit code.
int run(const std::vector<std::string>& args);

/// Normalizer shared by a whole dataset: one scale for all axes, large
/// enough that every gt center and dim lands within 90% of its range.
Normalizer auto_normalizer(std::span<const SceneRecord> records);

/// Normalizer for one scene under a model space: per-scene quartiles of
/// the record's points when the space is in quartile mode, else the
/// space's own normalizer.
Normalizer scene_normalizer(const BoxSpace& space, const SceneRecord& r);

/// The model seen through the scene's normalizer.
DistributionPtr scene_view(const DistributionPtr& model, const SceneRecord& r);

std::vector<TrainingExample> make_examples(std::span<const SceneRecord> records, const BoxSpace& space);

struct FitSettings {
  FitConfig config;
  std::string backend = "tabular";
  /// fixed | auto | quartile
  std::string normalizer = "auto";
};

/// Fit config file: FitConfig keys plus "backend", "normalizer" and the
/// shortcuts "symmetry" and "bins" (applied on top of "space").
FitSettings fit_settings_from_json(const Json& j);
DistributionPtr fit_model(std::span<const SceneRecord> records, FitSettings settings);

struct PredictOptions {
  std::string method = "beam";
  int beam_width = 32;
  int k = 64;
  int m = 64;
  double u_alpha = 0.2;
  double u_beta = 0.8;
  /// Retries with doubled k when a quantile set comes out empty.
  int max_retries = 3;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct Prediction {
  std::string id;
  int context = 0;
  std::string method;
  SymmetryMode symmetry = SymmetryMode::none;
  BoxParams box;
  double score = 0.0;
  /// Method-specific fields (k, m, seed, sku_index, ...).
  Json extra = Json::object();
};

Json to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j);

/// Predictions in record order. Quantile runs seed object i with
/// derive_seed(seed, i).
std::vector<Prediction> predict_all(const DistributionPtr& model, std::span<const SceneRecord> records,
                                    const PredictOptions& opt);

}  // namespace boxcast::app
