#pragma once

#include <Eigen/Core>
#include <array>
#include <string_view>
#include <vector>

namespace boxcast {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Intrinsic Z-Y-X Euler angles. Canonical ranges: yaw and roll in [-pi, pi),
/// pitch in [-pi/2, pi/2].
struct EulerZYX {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  bool operator==(const EulerZYX&) const = default;
};

/// Oriented box: extents along its local axes, center, and orientation.
/// World point x belongs to the box iff |R^T (x - center)| <= dims / 2.
struct BoxParams {
  Vec3 dims{1.0, 1.0, 1.0};
  Vec3 center{0.0, 0.0, 0.0};
  EulerZYX rot{};

  Mat3 rotation() const;
  double volume() const { return dims.prod(); }

  bool operator==(const BoxParams& o) const {
    return dims == o.dims && center == o.center && rot == o.rot;
  }
};

/// Unit quaternion, hemisphere-canonical (w >= 0).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
};

/// Which parameter tuples describe the same physical box.
enum class SymmetryMode { none, yaw, full_so3 };

std::string_view to_string(SymmetryMode mode);
SymmetryMode parse_symmetry_mode(std::string_view name);

/// Wrap an angle into [-pi, pi).
double wrap_angle(double a);

Mat3 rotation_matrix(const EulerZYX& e);
/// Canonical Euler angles of a rotation matrix; at gimbal lock roll is 0.
EulerZYX euler_from_matrix(const Mat3& r);
EulerZYX canonicalize(const EulerZYX& e);

Quaternion to_quaternion(const EulerZYX& e);
Quaternion quaternion_from_matrix(const Mat3& r);
Mat3 rotation_matrix(const Quaternion& q);
EulerZYX to_euler(const Quaternion& q);

std::array<Vec3, 8> corners(const BoxParams& box);

/// Throws Error when dims are not strictly positive or a value is not finite.
void validate(const BoxParams& box);

/// Box with canonical Euler angles; yaw mode also zeroes pitch and roll.
BoxParams canonical_box(const BoxParams& box, SymmetryMode mode = SymmetryMode::none);

/// Axis relabelings P of a box frame: a box (d, R) equals the box
/// (|P^T| d, R P) for every P in the group. Identity comes first.
/// none: {I}; yaw: the four quarter turns about z; full_so3: the 24 proper
/// signed permutation matrices.
const std::vector<Mat3>& symmetry_group(SymmetryMode mode);

/// Every parameter tuple representing the same physical box, in group order.
/// Duplicate tuples (after canonicalization) are removed.
std::vector<BoxParams> enumerate_equivalent_params(const BoxParams& box, SymmetryMode mode);

}  // namespace boxcast
