#include "boxcast/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "boxcast/error.hpp"

namespace boxcast {

std::string_view to_string(NormalizerMode mode) {
  switch (mode) {
    case NormalizerMode::quartile: return "quartile";
    case NormalizerMode::scalar_max: return "scalar_max";
    case NormalizerMode::fixed: return "fixed";
  }
  return "fixed";
}

NormalizerMode parse_normalizer_mode(std::string_view name) {
  if (name == "quartile") return NormalizerMode::quartile;
  if (name == "scalar_max") return NormalizerMode::scalar_max;
  if (name == "fixed") return NormalizerMode::fixed;
  throw Error("unknown normalizer mode '" + std::string(name) + "'");
}

Normalizer Normalizer::fixed(const Vec3& scale, const Vec3& offset) {
  if ((scale.array() < kScaleFloor).any()) throw Error("normalizer scale below floor");
  return {scale, offset, NormalizerMode::fixed};
}

double linear_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("empty point set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Normalizer normalize_cloud(std::span<const Vec3> points, NormalizerMode mode) {
  if (points.empty()) throw Error("empty point set");
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw Error("point cloud has non-finite coordinates");
  }

  Normalizer n;
  n.mode = mode;
  if (mode == NormalizerMode::quartile) {
    std::vector<double> axis(points.size());
    for (int a = 0; a < 3; ++a) {
      std::transform(points.begin(), points.end(), axis.begin(), [a](const Vec3& p) { return p[a]; });
      const double q1 = linear_quantile(axis, 0.25);
      const double q3 = linear_quantile(axis, 0.75);
      n.scale[a] = std::max(q3 - q1, kScaleFloor);
      n.offset[a] = 0.5 * (q1 + q3);
    }
    return n;
  }

  Vec3 lo = points.front(), hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if (mode == NormalizerMode::scalar_max) {
    n.scale = Vec3::Constant(std::max((hi - lo).maxCoeff(), kScaleFloor));
  } else {
    n.scale = (hi - lo).cwiseMax(Vec3::Constant(kScaleFloor));
  }
  n.offset = 0.5 * (lo + hi);
  return n;
}

}  // namespace boxcast
