#pragma once

#include <array>
#include <vector>

#include "boxcast/box.hpp"

namespace boxcast {

/// Absolute slack (meters) for boundary-inclusive containment.
inline constexpr double kContainmentTolerance = 1e-9;
/// Boxes with any dimension below this are treated as zero-volume slabs.
inline constexpr double kDegenerateDim = 1e-9;

/// Closed half-space {x : normal . x <= offset}.
struct HalfSpace {
  Vec3 normal;
  double offset = 0.0;
};

std::array<HalfSpace, 6> halfspaces(const BoxParams& box);

/// Convex polytope stored as outward-oriented planar faces (vertices CCW
/// seen from outside). Closed under clipping by a half-space.
class ConvexPolytope {
 public:
  using Polygon = std::vector<Vec3>;

  ConvexPolytope() = default;
  static ConvexPolytope from_box(const BoxParams& box);

  /// Intersection with one half-space (Sutherland-Hodgman per face plus a
  /// cap polygon on the cutting plane).
  ConvexPolytope clipped(const HalfSpace& h) const;

  double volume() const;
  bool empty() const { return faces_.empty(); }
  const std::vector<Polygon>& faces() const { return faces_; }

 private:
  explicit ConvexPolytope(std::vector<Polygon> faces) : faces_(std::move(faces)) {}
  std::vector<Polygon> faces_;
};

bool is_degenerate(const BoxParams& box);
/// Volume, 0 for degenerate boxes.
double box_volume(const BoxParams& box);

/// vol(a intersect b): a's polytope clipped by b's six half-spaces.
double intersection_volume(const BoxParams& a, const BoxParams& b);

double iou(const BoxParams& a, const BoxParams& b);

struct IogResult {
  double value = 0.0;
  /// The ground truth was a zero-volume slab; value refers to the limiting slab.
  bool degenerate_gt = false;
};

/// vol(pred intersect gt) / vol(gt). A degenerate gt scores 1 when it lies
/// inside pred, otherwise the ratio for the slab thickened to 1e-6.
IogResult iog_checked(const BoxParams& pred, const BoxParams& gt);
inline double iog(const BoxParams& pred, const BoxParams& gt) { return iog_checked(pred, gt).value; }

/// |R^T (x - c)| <= d / 2 per axis, boundary inclusive.
bool contains_point(const BoxParams& box, const Vec3& x);

struct OracleEstimate {
  double iou = 0.0;
  double iog = 0.0;
};

/// Brute-force rasterization: both boxes sampled at the voxel centers of a
/// resolution^3 grid over their joint axis-aligned bounds. Test-only oracle;
/// iog treats b as the ground truth. Each grid row is resolved analytically,
/// which counts exactly the voxel centers a point-by-point scan would.
OracleEstimate voxel_iou_oracle(const BoxParams& a, const BoxParams& b, int resolution);

}  // namespace boxcast
