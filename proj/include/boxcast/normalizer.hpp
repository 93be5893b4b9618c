#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "boxcast/box.hpp"

namespace boxcast {

/// Floor applied to every normalizer scale (meters).
inline constexpr double kScaleFloor = 1e-3;

enum class NormalizerMode { quartile, scalar_max, fixed };

std::string_view to_string(NormalizerMode mode);
NormalizerMode parse_normalizer_mode(std::string_view name);

/// Maps metric box parameters into the unit ranges the quantizer bins:
/// dims / scale and (center - offset) / scale, per axis.
struct Normalizer {
  Vec3 scale{1.0, 1.0, 1.0};
  Vec3 offset{0.0, 0.0, 0.0};
  NormalizerMode mode = NormalizerMode::fixed;

  static Normalizer fixed(const Vec3& scale, const Vec3& offset);

  Vec3 normalize_dims(const Vec3& d) const { return d.cwiseQuotient(scale); }
  Vec3 denormalize_dims(const Vec3& d) const { return d.cwiseProduct(scale); }
  Vec3 normalize_center(const Vec3& c) const { return (c - offset).cwiseQuotient(scale); }
  Vec3 denormalize_center(const Vec3& c) const { return c.cwiseProduct(scale) + offset; }

  bool operator==(const Normalizer& o) const {
    return scale == o.scale && offset == o.offset && mode == o.mode;
  }
};

/// Linear-interpolation quantile (the "linear" rule: h = (n - 1) p).
double linear_quantile(std::vector<double> values, double p);

/// Normalizer estimated from a point cloud.
///  quartile:   scale = Q3 - Q1, offset = (Q1 + Q3) / 2, per axis.
///  scalar_max: one scale for all axes, the largest axis extent of the
///              cloud; offset = center of the cloud's axis-aligned bounds.
/// Every scale is floored at kScaleFloor. Throws on an empty cloud.
Normalizer normalize_cloud(std::span<const Vec3> points,
                           NormalizerMode mode = NormalizerMode::quartile);

}  // namespace boxcast
