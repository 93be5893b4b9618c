#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "boxcast/backends.hpp"
#include "boxcast/json_io.hpp"

namespace boxcast {

struct TrainingExample {
  Context context;
  BoxParams gt;
  Normalizer normalizer;
  SymmetryMode symmetry = SymmetryMode::none;
};

struct WeightedTarget {
  QuantizedBox box;
  double weight = 1.0;
};

/// Every equivalent parameterization of the ground truth, quantized and
/// weighted 1/|B|. With averaging off, only the canonical tuple (weight 1).
std::vector<WeightedTarget> build_targets(const TrainingExample& ex, const Quantizer& q,
                                          bool symmetry_averaging = true);

struct FitConfig {
  double alpha = 0.1;
  int prefix_buckets = 8;
  bool symmetry_averaging = true;
  /// Quantizer, model normalizer (used when decoding without a per-scene
  /// normalizer), symmetry mode and chain order of the fitted model.
  BoxSpace space;
  /// 0: one more than the largest context id in the data.
  int num_contexts = 0;

  void validate() const;
};

Json to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const Json& j);

/// Weighted counts per (context, step, bucketed prefix) row plus the
/// per-step marginal. Weights are summed as integers in units of
/// 1/lcm(1..24), so the tables do not depend on the order of the data.
std::shared_ptr<TabularChain> fit_tabular(std::span<const TrainingExample> data, const FitConfig& cfg);

/// Per-context mean and variance of the normalized canonical parameters.
/// Variances are floored at kGaussianVarFloor; contexts without data get
/// range midpoints and unit variance.
inline constexpr double kGaussianVarFloor = 1e-8;
std::shared_ptr<GaussianBaseline> fit_gaussian(std::span<const TrainingExample> data, const FitConfig& cfg);

/// -mean over examples of sum_targets weight * log_prob(target).
double evaluate_nll(const BoxDistribution& model, std::span<const TrainingExample> data,
                    bool symmetry_averaging = true);

/// Monte-Carlo E_{b ~ p}[1 - IoU(b', gt)] with b' = expectation_refine(b).
double expected_iou_loss(const BoxDistribution& model, const Context& ctx, const BoxParams& gt, int n_samples,
                         Rng& rng);

struct FitReport {
  std::size_t dataset_size = 0;
  std::size_t num_targets = 0;
  /// Fraction of examples whose canonical tuple had a clamped parameter.
  double overflow_rate = 0.0;
  double nll = 0.0;
  /// Count-weighted mean entropy (nats) of the fitted rows, per chain step.
  std::array<double, kNumParams> step_entropy{};
};

FitReport make_fit_report(const TabularChain& model, std::span<const TrainingExample> data, bool symmetry_averaging);
Json to_json(const FitReport& r);

}  // namespace boxcast
