#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "boxcast/box.hpp"
#include "boxcast/quantizer.hpp"
#include "boxcast/random.hpp"

namespace boxcast {

/// Log-probability used for events of exactly zero mass.
inline constexpr double kLogZero = -1e30;

/// Scene conditioning: a discrete scene-feature id plus optional side features.
struct Context {
  int id = 0;
  std::vector<double> features;
};

/// Autoregressive distribution over quantized box tuples,
///   p(b | ctx) = prod_i p(b_order[i] | b_order[0..i-1], ctx).
/// Prefixes passed to conditional() hold bin indices in chain order.
/// Implementations are immutable after construction and safe to query from
/// many threads.
class BoxDistribution {
 public:
  explicit BoxDistribution(BoxSpace space);
  virtual ~BoxDistribution() = default;

  const BoxSpace& space() const { return space_; }
  const ParamOrder& param_order() const { return space_.order; }
  int bins() const { return space_.quantizer.bins; }

  virtual std::string backend() const = 0;
  virtual int num_contexts() const = 0;

  /// Probability vector over the bins of parameter order[prefix.size()].
  virtual std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const = 0;

  /// One draw from conditional(prefix, ctx). Backends may override with a
  /// faster sampler of the same distribution.
  virtual int sample_step(std::span<const int> prefix, const Context& ctx, Rng& rng) const;

  /// Continuous box for a tuple. Default: bin centers, denormalized.
  virtual BoxParams decode(const QuantizedBox& qb) const;

  /// Continuous draw. Default: decode(sample(...)).
  virtual BoxParams sample_box(const Context& ctx, Rng& rng) const;

  /// Throws Error when ctx.id is outside the context vocabulary.
  void check_context(const Context& ctx) const;

 protected:
  BoxSpace space_;
};

using DistributionPtr = std::shared_ptr<const BoxDistribution>;

/// Tuple values rearranged into chain order, and back.
std::array<int, kNumParams> to_chain_order(const QuantizedBox& qb, const ParamOrder& order);
QuantizedBox from_chain_order(std::span<const int> chain, const ParamOrder& order);

/// Sum of log conditionals in chain order; kLogZero if any step has zero mass.
double log_prob(const BoxDistribution& d, const QuantizedBox& qb, const Context& ctx);

/// Ancestral sampling in chain order.
QuantizedBox sample(const BoxDistribution& d, const Context& ctx, Rng& rng);

/// Each parameter replaced by its conditional mean (over bin centers) given
/// the sampled prefix, then denormalized.
BoxParams expectation_refine(const BoxDistribution& d, const QuantizedBox& sampled, const Context& ctx);

/// The chain with its dimension steps pinned to `dims` (bin indices of
/// kDimX, kDimY, kDimZ). Its log_prob scores only the remaining steps; the
/// pinned steps contribute 0 when matched.
class DimsConditioned final : public BoxDistribution {
 public:
  DimsConditioned(DistributionPtr base, std::array<int, 3> dims);

  std::string backend() const override { return "conditioned:" + base_->backend(); }
  int num_contexts() const override { return base_->num_contexts(); }
  std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const override;
  BoxParams decode(const QuantizedBox& qb) const override { return base_->decode(qb); }

  const std::array<int, 3>& dims() const { return dims_; }
  /// log p(dims | ctx) under the base chain.
  double prefix_log_prob(const Context& ctx) const;

 private:
  DistributionPtr base_;
  std::array<int, 3> dims_;
};

/// Throws "dimensions not prefix of ordering" unless the chain starts with
/// the three dimension parameters.
DistributionPtr condition_on_dims(DistributionPtr d, std::array<int, 3> dims, const Context& ctx);

/// Same chain decoded under a different normalizer (per-scene normalization).
class RenormalizedView final : public BoxDistribution {
 public:
  RenormalizedView(DistributionPtr base, const Normalizer& normalizer);

  std::string backend() const override { return base_->backend(); }
  int num_contexts() const override { return base_->num_contexts(); }
  std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const override {
    return base_->conditional(prefix, ctx);
  }
  int sample_step(std::span<const int> prefix, const Context& ctx, Rng& rng) const override {
    return base_->sample_step(prefix, ctx, rng);
  }

 private:
  DistributionPtr base_;
};

}  // namespace boxcast
