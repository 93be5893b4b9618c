#include <algorithm>

#include "boxcast/backends.hpp"
#include "boxcast/error.hpp"

namespace boxcast {

TabularChain::TabularChain(BoxSpace space, int num_contexts, double alpha, int prefix_buckets,
                           std::vector<StepTable> tables)
    : BoxDistribution(std::move(space)),
      num_contexts_(num_contexts),
      alpha_(alpha),
      prefix_buckets_(std::clamp(prefix_buckets, 1, bins())),
      tables_(std::move(tables)) {
  if (num_contexts_ < 1) throw Error("tabular chain needs at least one context");
  if (!(alpha_ > 0.0)) throw Error("smoothing alpha must be positive");
  if (tables_.size() != static_cast<std::size_t>(num_contexts_) * kNumParams) {
    throw Error("tabular chain table count does not match contexts x steps");
  }
}

TabularChain::PrefixKey TabularChain::prefix_key(std::span<const int> prefix) const {
  PrefixKey key(prefix.size());
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    key[i] = static_cast<std::uint16_t>(static_cast<long>(prefix[i]) * prefix_buckets_ / bins());
  }
  return key;
}

const TabularChain::Row& TabularChain::row_for(std::span<const int> prefix, int context) const {
  const StepTable& t = table(context, static_cast<int>(prefix.size()));
  if (!t.rows.empty()) {
    std::array<std::uint16_t, kNumParams> key{};
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      key[i] = static_cast<std::uint16_t>(static_cast<long>(prefix[i]) * prefix_buckets_ / bins());
    }
    const auto it = t.rows.find(std::span<const std::uint16_t>(key.data(), prefix.size()));
    if (it != t.rows.end()) return it->second;
  }
  return t.marginal;
}

std::vector<double> TabularChain::conditional(std::span<const int> prefix, const Context& ctx) const {
  const Row& row = row_for(prefix, ctx.id);
  const double denom = row.total + alpha_ * bins();
  std::vector<double> probs(bins(), alpha_ / denom);
  for (const auto& [bin, count] : row.counts) probs[bin] = (count + alpha_) / denom;
  return probs;
}

int TabularChain::sample_step(std::span<const int> prefix, const Context& ctx, Rng& rng) const {
  check_context(ctx);
  const Row& row = row_for(prefix, ctx.id);
  const double u = uniform01(rng) * (row.total + alpha_ * bins());
  if (u < row.total) {
    double acc = 0.0;
    for (const auto& [bin, count] : row.counts) {
      acc += count;
      if (u < acc) return bin;
    }
    return row.counts.back().first;
  }
  return std::min(static_cast<int>((u - row.total) / alpha_), bins() - 1);
}

}  // namespace boxcast
