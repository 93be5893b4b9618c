#include "boxcast/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "boxcast/error.hpp"

namespace boxcast {

ParamOrder default_param_order() { return {kDimX, kDimY, kDimZ, kCenterX, kCenterY, kCenterZ, kYaw, kPitch, kRoll}; }

bool is_permutation(const ParamOrder& order) {
  std::array<bool, kNumParams> seen{};
  for (int p : order) {
    if (p < 0 || p >= kNumParams || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

std::array<Range, kNumParams> Quantizer::default_ranges() {
  constexpr double pi = std::numbers::pi;
  return {Range{0, 1}, {0, 1}, {0, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-pi, pi}, {-pi / 2, pi / 2}, {-pi, pi}};
}

void Quantizer::validate() const {
  if (bins < 2) throw Error("quantizer needs at least 2 bins");
  for (int p = 0; p < kNumParams; ++p) {
    if (!(ranges[p].lo < ranges[p].hi)) throw Error("quantizer range lo >= hi for parameter " + std::to_string(p));
  }
}

double Quantizer::bin_width(int param) const {
  return (ranges[param].hi - ranges[param].lo) / bins;
}

int Quantizer::index_of(int param, double value, bool* overflow) const {
  const Range& r = ranges[param];
  if (overflow) *overflow = value < r.lo || value > r.hi;
  const double t = std::floor((value - r.lo) / (r.hi - r.lo) * bins);
  if (!(t >= 0.0)) return 0;
  if (t > bins - 1) return bins - 1;
  return static_cast<int>(t);
}

double Quantizer::bin_center(int param, int index) const {
  const Range& r = ranges[param];
  return (index + 0.5) / bins * (r.hi - r.lo) + r.lo;
}

bool QuantizedBox::any_overflow() const {
  return std::any_of(overflow.begin(), overflow.end(), [](bool b) { return b; });
}

NormalizedParams to_normalized(const BoxParams& box, const Normalizer& n, SymmetryMode mode) {
  const BoxParams b = canonical_box(box, mode);
  const Vec3 d = n.normalize_dims(b.dims);
  const Vec3 c = n.normalize_center(b.center);
  return {d.x(), d.y(), d.z(), c.x(), c.y(), c.z(), b.rot.yaw, b.rot.pitch, b.rot.roll};
}

BoxParams from_normalized(const NormalizedParams& v, const Normalizer& n, SymmetryMode mode) {
  BoxParams b;
  b.dims = n.denormalize_dims(Vec3(v[kDimX], v[kDimY], v[kDimZ]));
  b.center = n.denormalize_center(Vec3(v[kCenterX], v[kCenterY], v[kCenterZ]));
  b.rot = {v[kYaw], v[kPitch], v[kRoll]};
  if (mode == SymmetryMode::yaw) b.rot.pitch = b.rot.roll = 0.0;
  return b;
}

QuantizedBox quantize_box(const BoxParams& box, const Normalizer& n, const Quantizer& q,
                          SymmetryMode mode) {
  const NormalizedParams v = to_normalized(box, n, mode);
  QuantizedBox qb;
  for (int p = 0; p < kNumParams; ++p) {
    bool over = false;
    qb.indices[p] = q.index_of(p, v[p], &over);
    qb.overflow[p] = over;
  }
  return qb;
}

BoxParams dequantize_box(const QuantizedBox& qb, const Normalizer& n, const Quantizer& q,
                         SymmetryMode mode) {
  NormalizedParams v{};
  for (int p = 0; p < kNumParams; ++p) {
    if (qb.indices[p] < 0 || qb.indices[p] >= q.bins) {
      throw Error("bin index " + std::to_string(qb.indices[p]) + " out of range for parameter " +
                  std::to_string(p));
    }
    v[p] = q.bin_center(p, qb.indices[p]);
  }
  return from_normalized(v, n, mode);
}

}  // namespace boxcast
