#include "boxcast/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "boxcast/error.hpp"

namespace boxcast {

namespace {

Vec3 newell_normal(const ConvexPolytope::Polygon& poly) {
  Vec3 n = Vec3::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& p = poly[i];
    const Vec3& q = poly[(i + 1) % poly.size()];
    n.x() += (p.y() - q.y()) * (p.z() + q.z());
    n.y() += (p.z() - q.z()) * (p.x() + q.x());
    n.z() += (p.x() - q.x()) * (p.y() + q.y());
  }
  return n;
}

Vec3 any_perpendicular(const Vec3& n) {
  const Vec3 axis = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(axis).normalized();
}

// Interval of the line p(t) = origin + t * dir inside the box, as [t0, t1];
// empty when t0 > t1.
std::pair<double, double> line_interval(const BoxParams& box, const Mat3& rt, const Vec3& origin,
                                        const Vec3& dir) {
  const Vec3 a = rt * dir;
  const Vec3 b = rt * (origin - box.center);
  const Vec3 h = box.dims / 2.0;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(a[k]) < 1e-15) {
      if (std::abs(b[k]) > h[k]) return {1.0, 0.0};
      continue;
    }
    double lo = (-h[k] - b[k]) / a[k];
    double hi = (h[k] - b[k]) / a[k];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  return {t0, t1};
}

// Voxel centers lo + (i + 0.5) * step, i in [0, n), falling inside [t0, t1].
std::int64_t count_centers(double t0, double t1, double lo, double step, int n) {
  if (t0 > t1) return 0;
  const double first = std::ceil((t0 - lo) / step - 0.5);
  const double last = std::floor((t1 - lo) / step - 0.5);
  const double i0 = std::max(first, 0.0);
  const double i1 = std::min(last, static_cast<double>(n - 1));
  return i1 >= i0 ? static_cast<std::int64_t>(i1 - i0) + 1 : 0;
}

}  // namespace

std::array<HalfSpace, 6> halfspaces(const BoxParams& box) {
  const Mat3 r = box.rotation();
  std::array<HalfSpace, 6> out;
  for (int j = 0; j < 3; ++j) {
    const Vec3 axis = r.col(j);
    const double c = axis.dot(box.center);
    const double h = box.dims[j] / 2.0;
    out[2 * j] = {axis, c + h};
    out[2 * j + 1] = {-axis, -c + h};
  }
  return out;
}

ConvexPolytope ConvexPolytope::from_box(const BoxParams& box) {
  static constexpr std::array<std::array<int, 4>, 6> kFaces{{
      {0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}}};
  const auto c = corners(box);
  std::vector<Polygon> faces;
  faces.reserve(6);
  for (const auto& f : kFaces) {
    Polygon poly{c[f[0]], c[f[1]], c[f[2]], c[f[3]]};
    const Vec3 centroid = (poly[0] + poly[1] + poly[2] + poly[3]) / 4.0;
    if (newell_normal(poly).dot(centroid - box.center) < 0.0) std::reverse(poly.begin(), poly.end());
    faces.push_back(std::move(poly));
  }
  return ConvexPolytope(std::move(faces));
}

ConvexPolytope ConvexPolytope::clipped(const HalfSpace& h) const {
  if (faces_.empty()) return {};

  double radius = 1.0;
  bool any_inside = false, any_outside = false;
  for (const auto& f : faces_) {
    for (const Vec3& v : f) {
      radius = std::max(radius, v.cwiseAbs().maxCoeff());
    }
  }
  const double eps = 1e-12 * radius;
  auto dist = [&](const Vec3& v) {
    const double d = h.normal.dot(v) - h.offset;
    return std::abs(d) <= eps ? 0.0 : d;
  };
  for (const auto& f : faces_) {
    for (const Vec3& v : f) {
      const double d = dist(v);
      any_inside |= d < 0.0;
      any_outside |= d > 0.0;
    }
  }
  if (!any_outside) return *this;
  if (!any_inside) return {};

  std::vector<Polygon> out_faces;
  out_faces.reserve(faces_.size() + 1);
  std::vector<Vec3> cap;
  for (const auto& f : faces_) {
    Polygon out;
    out.reserve(f.size() + 1);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Vec3& p = f[i];
      const Vec3& q = f[(i + 1) % f.size()];
      const double dp = dist(p), dq = dist(q);
      if (dp <= 0.0) {
        out.push_back(p);
        if (dp == 0.0) cap.push_back(p);
      }
      if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
        const Vec3 x = p + (q - p) * (dp / (dp - dq));
        out.push_back(x);
        cap.push_back(x);
      }
    }
    if (out.size() >= 3) out_faces.push_back(std::move(out));
  }

  // Cap polygon on the cutting plane.
  std::vector<Vec3> unique;
  for (const Vec3& p : cap) {
    const bool seen = std::any_of(unique.begin(), unique.end(),
                                  [&](const Vec3& u) { return (u - p).cwiseAbs().maxCoeff() <= 1e-10 * radius; });
    if (!seen) unique.push_back(p);
  }
  if (unique.size() >= 3) {
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : unique) centroid += p;
    centroid /= static_cast<double>(unique.size());
    const Vec3 n = h.normal.normalized();
    const Vec3 u = any_perpendicular(n);
    const Vec3 v = n.cross(u);
    std::sort(unique.begin(), unique.end(), [&](const Vec3& a, const Vec3& b) {
      const Vec3 da = a - centroid, db = b - centroid;
      return std::atan2(da.dot(v), da.dot(u)) < std::atan2(db.dot(v), db.dot(u));
    });
    out_faces.push_back(std::move(unique));
  }
  if (out_faces.size() < 4) return {};
  return ConvexPolytope(std::move(out_faces));
}

double ConvexPolytope::volume() const {
  if (faces_.empty()) return 0.0;
  const Vec3 ref = faces_.front().front();
  double six_vol = 0.0;
  for (const auto& f : faces_) {
    const Vec3 a = f[0] - ref;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      six_vol += a.dot((f[i] - ref).cross(f[i + 1] - ref));
    }
  }
  return std::max(0.0, six_vol / 6.0);
}

bool is_degenerate(const BoxParams& box) { return (box.dims.array() < kDegenerateDim).any(); }

double box_volume(const BoxParams& box) { return is_degenerate(box) ? 0.0 : box.volume(); }

double intersection_volume(const BoxParams& a, const BoxParams& b) {
  if (is_degenerate(a) || is_degenerate(b)) return 0.0;
  const double reach = 0.5 * (a.dims.norm() + b.dims.norm());
  if ((a.center - b.center).norm() > reach) return 0.0;

  ConvexPolytope poly = ConvexPolytope::from_box(a);
  for (const HalfSpace& h : halfspaces(b)) {
    poly = poly.clipped(h);
    if (poly.empty()) return 0.0;
  }
  return std::min(poly.volume(), std::min(a.volume(), b.volume()));
}

double iou(const BoxParams& a, const BoxParams& b) {
  const double va = box_volume(a), vb = box_volume(b);
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  const double inter = intersection_volume(a, b);
  return std::clamp(inter / (va + vb - inter), 0.0, 1.0);
}

IogResult iog_checked(const BoxParams& pred, const BoxParams& gt) {
  if (!is_degenerate(gt)) {
    const double vg = gt.volume();
    return {std::clamp(intersection_volume(pred, gt) / vg, 0.0, 1.0), false};
  }
  const auto c = corners(gt);
  if (std::all_of(c.begin(), c.end(), [&](const Vec3& p) { return contains_point(pred, p); })) {
    return {1.0, true};
  }
  BoxParams slab = gt;
  slab.dims = gt.dims.cwiseMax(Vec3::Constant(1e-6));
  return {std::clamp(intersection_volume(pred, slab) / slab.volume(), 0.0, 1.0), true};
}

bool contains_point(const BoxParams& box, const Vec3& x) {
  const Vec3 local = box.rotation().transpose() * (x - box.center);
  return (local.cwiseAbs().array() <= (box.dims / 2.0).array() + kContainmentTolerance).all();
}

OracleEstimate voxel_iou_oracle(const BoxParams& a, const BoxParams& b, int resolution) {
  if (resolution < 16) throw Error("voxel oracle resolution must be at least 16");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const BoxParams* box : {&a, &b}) {
    for (const Vec3& c : corners(*box)) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  const Vec3 step = (hi - lo) / resolution;
  const Mat3 rta = a.rotation().transpose();
  const Mat3 rtb = b.rotation().transpose();

  std::int64_t na = 0, nb = 0, nab = 0;
  for (int k = 0; k < resolution; ++k) {
    const double z = lo.z() + (k + 0.5) * step.z();
    for (int j = 0; j < resolution; ++j) {
      const double y = lo.y() + (j + 0.5) * step.y();
      const Vec3 origin(0.0, y, z);
      const auto [a0, a1] = line_interval(a, rta, origin, Vec3::UnitX());
      const auto [b0, b1] = line_interval(b, rtb, origin, Vec3::UnitX());
      na += count_centers(a0, a1, lo.x(), step.x(), resolution);
      nb += count_centers(b0, b1, lo.x(), step.x(), resolution);
      nab += count_centers(std::max(a0, b0), std::min(a1, b1), lo.x(), step.x(), resolution);
    }
  }
  OracleEstimate est;
  const std::int64_t uni = na + nb - nab;
  est.iou = uni > 0 ? static_cast<double>(nab) / static_cast<double>(uni) : 0.0;
  est.iog = nb > 0 ? static_cast<double>(nab) / static_cast<double>(nb) : 0.0;
  return est;
}

}  // namespace boxcast
