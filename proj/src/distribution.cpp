#include "boxcast/distribution.hpp"

#include <cmath>
#include <string>

#include "boxcast/error.hpp"

namespace boxcast {

BoxDistribution::BoxDistribution(BoxSpace space) : space_(std::move(space)) {
  space_.quantizer.validate();
  if (!is_permutation(space_.order)) throw Error("param_order is not a permutation of the 9 parameters");
}

BoxParams BoxDistribution::decode(const QuantizedBox& qb) const { return dequantize_box(qb, space_); }

BoxParams BoxDistribution::sample_box(const Context& ctx, Rng& rng) const {
  return decode(sample(*this, ctx, rng));
}

int BoxDistribution::sample_step(std::span<const int> prefix, const Context& ctx, Rng& rng) const {
  return sample_categorical(conditional(prefix, ctx), rng);
}

void BoxDistribution::check_context(const Context& ctx) const {
  if (ctx.id < 0 || ctx.id >= num_contexts()) {
    throw Error("context id " + std::to_string(ctx.id) + " outside vocabulary of " +
                std::to_string(num_contexts()));
  }
}

std::array<int, kNumParams> to_chain_order(const QuantizedBox& qb, const ParamOrder& order) {
  std::array<int, kNumParams> chain{};
  for (int i = 0; i < kNumParams; ++i) chain[i] = qb.indices[order[i]];
  return chain;
}

QuantizedBox from_chain_order(std::span<const int> chain, const ParamOrder& order) {
  QuantizedBox qb;
  for (int i = 0; i < kNumParams; ++i) qb.indices[order[i]] = chain[i];
  return qb;
}

double log_prob(const BoxDistribution& d, const QuantizedBox& qb, const Context& ctx) {
  d.check_context(ctx);
  const auto chain = to_chain_order(qb, d.param_order());
  for (int v : chain) {
    if (v < 0 || v >= d.bins()) throw Error("bin index out of range in log_prob");
  }
  double total = 0.0;
  for (int i = 0; i < kNumParams; ++i) {
    const auto probs = d.conditional(std::span<const int>(chain.data(), i), ctx);
    const double p = probs[chain[i]];
    if (p <= 0.0) return kLogZero;
    total += std::log(p);
  }
  return total;
}

QuantizedBox sample(const BoxDistribution& d, const Context& ctx, Rng& rng) {
  d.check_context(ctx);
  std::array<int, kNumParams> chain{};
  for (int i = 0; i < kNumParams; ++i) {
    chain[i] = d.sample_step(std::span<const int>(chain.data(), i), ctx, rng);
  }
  return from_chain_order(chain, d.param_order());
}

BoxParams expectation_refine(const BoxDistribution& d, const QuantizedBox& sampled, const Context& ctx) {
  d.check_context(ctx);
  const auto& order = d.param_order();
  const auto& q = d.space().quantizer;
  const auto chain = to_chain_order(sampled, order);
  NormalizedParams v{};
  for (int i = 0; i < kNumParams; ++i) {
    const auto probs = d.conditional(std::span<const int>(chain.data(), i), ctx);
    const int param = order[i];
    double mean = 0.0;
    for (int b = 0; b < d.bins(); ++b) {
      if (probs[b] > 0.0) mean += probs[b] * q.bin_center(param, b);
    }
    v[param] = mean;
  }
  return from_normalized(v, d.space().normalizer, d.space().symmetry);
}

DimsConditioned::DimsConditioned(DistributionPtr base, std::array<int, 3> dims)
    : BoxDistribution(base->space()), base_(std::move(base)), dims_(dims) {
  const auto& order = param_order();
  for (int i = 0; i < 3; ++i) {
    if (order[i] > kDimZ) throw Error("dimensions not prefix of ordering");
  }
  for (int v : dims_) {
    if (v < 0 || v >= bins()) throw Error("dimension bin index out of range");
  }
}

std::vector<double> DimsConditioned::conditional(std::span<const int> prefix, const Context& ctx) const {
  const std::size_t step = prefix.size();
  if (step < 3) {
    std::vector<double> row(bins(), 0.0);
    row[dims_[param_order()[step]]] = 1.0;
    return row;
  }
  return base_->conditional(prefix, ctx);
}

double DimsConditioned::prefix_log_prob(const Context& ctx) const {
  base_->check_context(ctx);
  std::array<int, 3> chain{};
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    chain[i] = dims_[param_order()[i]];
    const auto probs = base_->conditional(std::span<const int>(chain.data(), i), ctx);
    if (probs[chain[i]] <= 0.0) return kLogZero;
    total += std::log(probs[chain[i]]);
  }
  return total;
}

DistributionPtr condition_on_dims(DistributionPtr d, std::array<int, 3> dims, const Context& ctx) {
  d->check_context(ctx);
  return std::make_shared<DimsConditioned>(std::move(d), dims);
}

namespace {
BoxSpace with_normalizer(BoxSpace s, const Normalizer& n) {
  s.normalizer = n;
  return s;
}
}  // namespace

RenormalizedView::RenormalizedView(DistributionPtr base, const Normalizer& normalizer)
    : BoxDistribution(with_normalizer(base->space(), normalizer)), base_(std::move(base)) {}

}  // namespace boxcast
