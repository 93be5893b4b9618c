#include <algorithm>
#include <cmath>

#include "boxcast/backends.hpp"
#include "boxcast/error.hpp"

namespace boxcast {

GaussianBaseline::GaussianBaseline(BoxSpace space, std::vector<Params> per_context)
    : BoxDistribution(std::move(space)), params_(std::move(per_context)) {
  if (params_.empty()) throw Error("gaussian baseline needs at least one context");
  for (const auto& p : params_) {
    for (int i = 0; i < kNumParams; ++i) {
      if (!std::isfinite(p.mean[i]) || !std::isfinite(p.log_var[i])) {
        throw Error("gaussian baseline parameters must be finite");
      }
    }
  }
}

double GaussianBaseline::sigma(int context, int param) const {
  return std::exp(0.5 * params_.at(context).log_var[param]);
}

std::vector<double> GaussianBaseline::conditional(std::span<const int> prefix, const Context& ctx) const {
  check_context(ctx);
  const int param = param_order()[prefix.size()];
  const double mu = params_[ctx.id].mean[param];
  const double s = sigma(ctx.id, param);
  const Range r = space_.quantizer.ranges[param];
  const double w = space_.quantizer.bin_width(param);
  // Upper-tail form keeps resolution far from the mean.
  auto tail = [&](double x) { return 0.5 * std::erfc((x - mu) / (s * std::numbers::sqrt2)); };
  std::vector<double> row(bins());
  double total = 0.0;
  double upper = tail(r.lo);
  for (int b = 0; b < bins(); ++b) {
    const double next = tail(r.lo + (b + 1) * w);
    row[b] = std::max(upper - next, 0.0);
    total += row[b];
    upper = next;
  }
  if (!(total > 0.0)) {
    std::fill(row.begin(), row.end(), 0.0);
    row[space_.quantizer.index_of(param, mu)] = 1.0;
    return row;
  }
  for (double& p : row) p /= total;
  return row;
}

BoxParams GaussianBaseline::sample_box(const Context& ctx, Rng& rng) const {
  check_context(ctx);
  NormalizedParams v{};
  for (int i = 0; i < kNumParams; ++i) {
    v[i] = params_[ctx.id].mean[i] + sigma(ctx.id, i) * standard_normal(rng);
  }
  for (int i = kDimX; i <= kDimZ; ++i) v[i] = std::max(v[i], 1e-6);
  return from_normalized(v, space_.normalizer, space_.symmetry);
}

BoxParams GaussianBaseline::mean_box(const Context& ctx) const {
  check_context(ctx);
  NormalizedParams v = params_[ctx.id].mean;
  for (int i = kDimX; i <= kDimZ; ++i) v[i] = std::max(v[i], 1e-6);
  return from_normalized(v, space_.normalizer, space_.symmetry);
}

}  // namespace boxcast
