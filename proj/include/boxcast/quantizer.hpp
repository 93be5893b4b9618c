#pragma once

#include <array>
#include <span>

#include "boxcast/box.hpp"
#include "boxcast/normalizer.hpp"

namespace boxcast {

inline constexpr int kNumParams = 9;

/// Parameter slots of the 9-tuple: dims, center, then Z-Y-X Euler angles.
enum Param : int { kDimX, kDimY, kDimZ, kCenterX, kCenterY, kCenterZ, kYaw, kPitch, kRoll };

using ParamOrder = std::array<int, kNumParams>;

/// dims -> center -> rotation.
ParamOrder default_param_order();
bool is_permutation(const ParamOrder& order);

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Range&) const = default;
};

/// Uniform bins over a per-parameter range, in normalized units for dims and
/// centers and radians for angles.
struct Quantizer {
  int bins = 512;
  std::array<Range, kNumParams> ranges = default_ranges();

  /// dims [0, 1], centers [-1, 1], yaw/roll [-pi, pi], pitch [-pi/2, pi/2].
  static std::array<Range, kNumParams> default_ranges();

  void validate() const;
  double bin_width(int param) const;
  /// floor((v - lo) / (hi - lo) * bins) clamped to [0, bins - 1].
  int index_of(int param, double value, bool* overflow = nullptr) const;
  double bin_center(int param, int index) const;

  bool operator==(const Quantizer&) const = default;
};

struct QuantizedBox {
  std::array<int, kNumParams> indices{};
  /// Set when the value fell outside its range before clamping.
  std::array<bool, kNumParams> overflow{};

  bool any_overflow() const;
  bool operator==(const QuantizedBox& o) const { return indices == o.indices; }
};

/// Everything needed to move between metric boxes and chain tuples.
struct BoxSpace {
  Quantizer quantizer;
  Normalizer normalizer;
  SymmetryMode symmetry = SymmetryMode::none;
  ParamOrder order = default_param_order();
};

using NormalizedParams = std::array<double, kNumParams>;

NormalizedParams to_normalized(const BoxParams& box, const Normalizer& n, SymmetryMode mode);
BoxParams from_normalized(const NormalizedParams& v, const Normalizer& n, SymmetryMode mode);

QuantizedBox quantize_box(const BoxParams& box, const Normalizer& n, const Quantizer& q,
                          SymmetryMode mode);
/// Bin centers, denormalized. Throws on an index outside [0, bins).
BoxParams dequantize_box(const QuantizedBox& qb, const Normalizer& n, const Quantizer& q,
                         SymmetryMode mode);

inline QuantizedBox quantize_box(const BoxParams& box, const BoxSpace& s) {
  return quantize_box(box, s.normalizer, s.quantizer, s.symmetry);
}
inline BoxParams dequantize_box(const QuantizedBox& qb, const BoxSpace& s) {
  return dequantize_box(qb, s.normalizer, s.quantizer, s.symmetry);
}

}  // namespace boxcast
