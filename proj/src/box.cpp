#include "boxcast/box.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "boxcast/error.hpp"

namespace boxcast {

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 rot_z(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_x(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Quaternion canonical_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  const double s = (w < 0.0 ? -1.0 : 1.0) / n;
  return {w * s, x * s, y * s, z * s};
}

std::vector<Mat3> build_full_group() {
  std::vector<Mat3> group;
  std::array<int, 3> perm{0, 1, 2};
  do {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3 p = Mat3::Zero();
      for (int i = 0; i < 3; ++i) p(i, perm[i]) = (signs >> i) & 1 ? -1.0 : 1.0;
      if (p.determinant() > 0.0) group.push_back(p);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return group;
}

std::vector<Mat3> build_yaw_group() {
  Mat3 half_turn, quarter, minus_quarter;
  half_turn << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  minus_quarter << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  return {Mat3::Identity(), half_turn, quarter, minus_quarter};
}

}  // namespace

std::string_view to_string(SymmetryMode mode) {
  switch (mode) {
    case SymmetryMode::none: return "none";
    case SymmetryMode::yaw: return "yaw";
    case SymmetryMode::full_so3: return "full_so3";
  }
  return "none";
}

SymmetryMode parse_symmetry_mode(std::string_view name) {
  if (name == "none") return SymmetryMode::none;
  if (name == "yaw") return SymmetryMode::yaw;
  if (name == "full_so3") return SymmetryMode::full_so3;
  throw Error("unknown symmetry mode '" + std::string(name) + "'");
}

double wrap_angle(double a) {
  double r = a - 2.0 * kPi * std::floor((a + kPi) / (2.0 * kPi));
  if (r >= kPi) r -= 2.0 * kPi;
  if (r < -kPi) r += 2.0 * kPi;
  return r;
}

Mat3 rotation_matrix(const EulerZYX& e) {
  return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
}

Mat3 BoxParams::rotation() const { return rotation_matrix(rot); }

EulerZYX euler_from_matrix(const Mat3& r) {
  EulerZYX e;
  const double cp = std::hypot(r(0, 0), r(1, 0));
  e.pitch = std::atan2(-r(2, 0), cp);
  if (cp > 1e-12) {
    e.yaw = std::atan2(r(1, 0), r(0, 0));
    e.roll = std::atan2(r(2, 1), r(2, 2));
  } else {
    e.pitch = r(2, 0) < 0.0 ? kPi / 2.0 : -kPi / 2.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
    e.roll = 0.0;
  }
  e.yaw = wrap_angle(e.yaw);
  e.roll = wrap_angle(e.roll);
  return e;
}

EulerZYX canonicalize(const EulerZYX& e) {
  if (std::abs(e.pitch) < kPi / 2.0) return {wrap_angle(e.yaw), e.pitch, wrap_angle(e.roll)};
  return euler_from_matrix(rotation_matrix(e));
}

Quaternion to_quaternion(const EulerZYX& e) {
  const double cy = std::cos(e.yaw / 2), sy = std::sin(e.yaw / 2);
  const double cp = std::cos(e.pitch / 2), sp = std::sin(e.pitch / 2);
  const double cr = std::cos(e.roll / 2), sr = std::sin(e.roll / 2);
  return canonical_quaternion(cy * cp * cr + sy * sp * sr, cy * cp * sr - sy * sp * cr,
                              cy * sp * cr + sy * cp * sr, sy * cp * cr - cy * sp * sr);
}

Quaternion quaternion_from_matrix(const Mat3& r) {
  const Eigen::Quaterniond q(r);
  return canonical_quaternion(q.w(), q.x(), q.y(), q.z());
}

Mat3 rotation_matrix(const Quaternion& q) {
  return Eigen::Quaterniond(q.w, q.x, q.y, q.z).normalized().toRotationMatrix();
}

EulerZYX to_euler(const Quaternion& q) { return euler_from_matrix(rotation_matrix(q)); }

std::array<Vec3, 8> corners(const BoxParams& box) {
  const Mat3 r = box.rotation();
  const Vec3 h = box.dims / 2.0;
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    out[i] = box.center + r * local;
  }
  return out;
}

void validate(const BoxParams& box) {
  if (!box.dims.allFinite() || !box.center.allFinite() || !std::isfinite(box.rot.yaw) ||
      !std::isfinite(box.rot.pitch) || !std::isfinite(box.rot.roll)) {
    throw Error("box has non-finite parameters");
  }
  if ((box.dims.array() <= 0.0).any()) throw Error("box dims must be positive");
}

BoxParams canonical_box(const BoxParams& box, SymmetryMode mode) {
  BoxParams out = box;
  if (mode == SymmetryMode::yaw) {
    out.rot = {wrap_angle(box.rot.yaw), 0.0, 0.0};
  } else {
    out.rot = canonicalize(box.rot);
  }
  return out;
}

const std::vector<Mat3>& symmetry_group(SymmetryMode mode) {
  static const std::vector<Mat3> identity{Mat3::Identity()};
  static const std::vector<Mat3> yaw = build_yaw_group();
  static const std::vector<Mat3> full = build_full_group();
  switch (mode) {
    case SymmetryMode::none: return identity;
    case SymmetryMode::yaw: return yaw;
    case SymmetryMode::full_so3: return full;
  }
  return identity;
}

std::vector<BoxParams> enumerate_equivalent_params(const BoxParams& box, SymmetryMode mode) {
  const BoxParams base = canonical_box(box, mode);
  if (mode == SymmetryMode::none) return {base};

  static constexpr std::array<double, 4> kYawOffsets{0.0, kPi, kPi / 2.0, -kPi / 2.0};
  const auto& group = symmetry_group(mode);
  const Mat3 r = base.rotation();

  std::vector<BoxParams> out;
  out.reserve(group.size());
  for (std::size_t g = 0; g < group.size(); ++g) {
    const Mat3& p = group[g];
    BoxParams member = base;
    member.dims = p.transpose().cwiseAbs() * base.dims;
    if (mode == SymmetryMode::yaw) {
      member.rot = {wrap_angle(base.rot.yaw + kYawOffsets[g]), 0.0, 0.0};
    } else {
      member.rot = euler_from_matrix(r * p);
    }
    if (std::find(out.begin(), out.end(), member) == out.end()) out.push_back(member);
  }
  return out;
}

}  // namespace boxcast
