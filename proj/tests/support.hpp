#pragma once

#include <Eigen/LU>

#include <boxcast/backends.hpp>
#include <boxcast/box.hpp>
#include <boxcast/geometry.hpp>
#include <boxcast/normalizer.hpp>
#include <boxcast/quantizer.hpp>
#include <boxcast/random.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace testing {

using namespace boxcast;

inline constexpr double kPi = std::numbers::pi;

inline EulerZYX random_euler(Rng& rng) {
  return {uniform(rng, -kPi, kPi), uniform(rng, -kPi / 2, kPi / 2), uniform(rng, -kPi, kPi)};
}

/// Box with dims in [lo, hi] and center in a cube of half-width `spread`.
inline BoxParams random_box(Rng& rng, double lo = 0.2, double hi = 2.0, double spread = 1.0) {
  BoxParams b;
  b.dims = {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
  b.center = {uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, -spread, spread)};
  b.rot = random_euler(rng);
  return b;
}

inline BoxParams axis_box(Vec3 dims, Vec3 center, double yaw = 0.0) {
  BoxParams b;
  b.dims = dims;
  b.center = center;
  b.rot.yaw = yaw;
  return b;
}

/// Space with `bins` bins on every parameter and the identity normalizer.
inline BoxSpace small_space(int bins, SymmetryMode mode = SymmetryMode::none) {
  BoxSpace s;
  s.quantizer.bins = bins;
  s.symmetry = mode;
  return s;
}

inline QuantizedBox tuple_of(std::array<int, kNumParams> idx) {
  QuantizedBox qb;
  qb.indices = idx;
  return qb;
}

/// Calls f on every tuple whose parameters at `active` range over all bins
/// and are 0 elsewhere.
template <class F>
void for_each_tuple(int bins, const std::vector<int>& active, F&& f) {
  std::array<int, kNumParams> idx{};
  std::size_t total = 1;
  for (std::size_t i = 0; i < active.size(); ++i) total *= static_cast<std::size_t>(bins);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t r = n;
    for (int p : active) {
      idx[p] = static_cast<int>(r % static_cast<std::size_t>(bins));
      r /= static_cast<std::size_t>(bins);
    }
    f(tuple_of(idx));
  }
}

/// Random strictly positive probability row; larger `power` makes it peakier.
inline std::vector<double> random_row(Rng& rng, int bins, double power = 1.0) {
  std::vector<double> w(bins);
  double total = 0.0;
  for (double& x : w) {
    x = std::pow(uniform01(rng), power) + 1e-3;
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

/// Points on the faces of `b` seen from a fixed oblique viewpoint.
inline std::vector<Vec3> visible_surface(const BoxParams& b, Rng& rng, int per_face = 100) {
  const Mat3 r = b.rotation();
  const Vec3 view = Vec3(0.3, -0.5, 1.0).normalized();
  std::vector<Vec3> pts;
  for (int axis = 0; axis < 3; ++axis)
    for (int side : {-1, 1}) {
      if (side * r.col(axis).dot(view) <= 0) continue;
      for (int i = 0; i < per_face; ++i) {
        Vec3 local;
        for (int k = 0; k < 3; ++k) local[k] = uniform(rng, -0.5, 0.5) * b.dims[k];
        local[axis] = 0.5 * side * b.dims[axis];
        pts.push_back(b.center + r * local);
      }
    }
  return pts;
}

/// Object of 0.2-2 m anywhere in a 10 x 10 x 3 m room.
inline BoxParams room_object(Rng& rng, SymmetryMode mode) {
  BoxParams b;
  b.dims = {uniform(rng, 0.2, 2), uniform(rng, 0.2, 2), uniform(rng, 0.2, 2)};
  b.center = {uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, 0, 3)};
  b.rot = random_euler(rng);
  if (mode == SymmetryMode::yaw) b.rot.pitch = b.rot.roll = 0.0;
  return b;
}

struct FidelityResult {
  double mean_iou = 0.0;
  double overflow_rate = 0.0;
  Quantizer quantizer;
};

/// Round-trip fidelity with object-centric normalization: each object is
/// normalized by the scalar_max normalizer of its visible surface. Dim and
/// center bin ranges are set from a separate calibration draw (observed
/// min/max plus 5% of the span); angle ranges stay at their natural values.
inline FidelityResult quantization_fidelity(SymmetryMode mode, int n, std::uint64_t seed, int bins = 512) {
  FidelityResult out;
  out.quantizer.bins = bins;
  Rng cal(derive_seed(seed, 1));
  std::array<double, 6> lo, hi;
  lo.fill(1e300);
  hi.fill(-1e300);
  for (int t = 0; t < 20000; ++t) {
    const BoxParams b = room_object(cal, mode);
    const Normalizer nz = normalize_cloud(visible_surface(b, cal), NormalizerMode::scalar_max);
    const NormalizedParams v = to_normalized(b, nz, mode);
    for (int p = 0; p < 6; ++p) {
      lo[p] = std::min(lo[p], v[p]);
      hi[p] = std::max(hi[p], v[p]);
    }
  }
  for (int p = 0; p < 6; ++p) {
    const double margin = 0.05 * (hi[p] - lo[p]);
    out.quantizer.ranges[p] = {lo[p] - margin, hi[p] + margin};
  }

  Rng rng(derive_seed(seed, 2));
  double sum = 0.0;
  int overflow = 0;
  for (int t = 0; t < n; ++t) {
    const BoxParams b = room_object(rng, mode);
    const Normalizer nz = normalize_cloud(visible_surface(b, rng), NormalizerMode::scalar_max);
    const QuantizedBox qb = quantize_box(b, nz, out.quantizer, mode);
    overflow += qb.any_overflow();
    sum += iou(b, dequantize_box(qb, nz, out.quantizer, mode));
  }
  out.mean_iou = sum / n;
  out.overflow_rate = static_cast<double>(overflow) / n;
  return out;
}

}  // namespace testing
