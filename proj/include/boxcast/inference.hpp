#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "boxcast/distribution.hpp"

namespace boxcast {

struct BeamConfig {
  int beam_width = 32;
};

struct BeamResult {
  QuantizedBox box;
  double log_prob = kLogZero;
};

/// Breadth beam over the 9 chain steps keeping the beam_width best prefixes
/// by cumulative log-probability. Ties go to the lexicographically lowest
/// prefix (lowest bin indices). The score is accumulated in chain order, so
/// it equals log_prob() of the returned tuple exactly.
BeamResult beam_search(const BoxDistribution& d, const Context& ctx, const BeamConfig& cfg = {});

/// O(x) = (1/k) * #{i : x in boxes[i]}.
std::vector<double> estimate_occupancy(std::span<const Vec3> points, std::span<const BoxParams> boxes);

struct QuantileConfig {
  double q = 0.5;
  int k = 64;
  /// Points per sampled box; a perfect cube s^3 gives an s x s x s jittered grid.
  int m = 64;
  std::uint64_t seed = 0;
};

/// k sampled boxes with their pooled, occupancy-tagged points. Each box
/// contributes m interior points plus its 8 corners.
struct OccupancySample {
  std::vector<BoxParams> boxes;
  std::vector<Vec3> points;
  std::vector<double> occupancy;
  int m = 0;
  std::uint64_t seed = 0;
};

OccupancySample draw_occupancy_sample(const BoxDistribution& d, const Context& ctx, int k, int m,
                                      std::uint64_t seed);

struct QuantileResult {
  std::shared_ptr<const OccupancySample> sample;
  double q = 0.0;
  /// Indices into sample->points with occupancy > q.
  std::vector<int> quantile_points;
  BoxParams box;
  /// Sampled box whose rotation frames the minimum-volume box.
  int rotation_index = 0;
};

/// Minimum-volume box around Q(q) = {x : O(x) > q} over the sampled
/// rotations. For rotation R_i the box is the AABB of R_i^T Q(q): dims are
/// max - min and the center is R_i (min + dims / 2). Throws QuantileError
/// "quantile too high for sample" when Q(q) is empty.
QuantileResult quantile_box_from_sample(std::shared_ptr<const OccupancySample> sample, double q);
QuantileResult quantile_box(const BoxDistribution& d, const Context& ctx, const QuantileConfig& cfg);

/// U = 1 - IoU(b_alpha, b_beta) on one shared sample.
double uncertainty_from_sample(const std::shared_ptr<const OccupancySample>& sample, double alpha, double beta);
double uncertainty_measure(const BoxDistribution& d, const Context& ctx, double alpha, double beta,
                           const QuantileConfig& cfg);

struct ConditionedResult {
  QuantizedBox box;
  int sku_index = -1;
  /// Full-tuple log_prob under the unconditioned chain.
  double score = kLogZero;
  /// Some SKU dimension was clamped by the quantizer.
  bool dims_overflow = false;
};

/// For each SKU (and each distinct axis assignment of its dims), pin the
/// dimension steps, beam-search the rest and score the full tuple with
/// log_prob. Best score wins; ties go to the lowest SKU index. SKU dims are
/// metric and normalized with the model's own normalizer. With
/// permute_axes off only the listed axis order is tried.
ConditionedResult dimension_conditioned_predict(const DistributionPtr& d, const Context& ctx,
                                                std::span<const Vec3> sku_dims, const BeamConfig& cfg = {},
                                                bool permute_axes = true);

}  // namespace boxcast
