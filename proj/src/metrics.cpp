#include "boxcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "boxcast/error.hpp"
#include "boxcast/geometry.hpp"

namespace boxcast {

double f1(double iou, double iog) {
  const double s = iou + iog;
  return s > 0.0 ? 2.0 * iou * iog / s : 0.0;
}

double err_dim(const Vec3& d, const Vec3& d_gt) {
  std::array<int, 3> perm{0, 1, 2};
  double best = std::numeric_limits<double>::infinity();
  do {
    double e = 0.0;
    for (int i = 0; i < 3; ++i) e += std::abs(d[perm[i]] - d_gt[i]);
    best = std::min(best, e);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

double quat_angle(const Quaternion& a, const Quaternion& b) {
  return 2.0 * std::acos(std::clamp(std::abs(a.dot(b)), 0.0, 1.0));
}

}  // namespace

double err_quat(const Quaternion& q, const Quaternion& q_gt, SymmetryMode mode) {
  const Mat3 r_gt = rotation_matrix(q_gt);
  double best = std::numeric_limits<double>::infinity();
  for (const Mat3& p : symmetry_group(mode)) {
    best = std::min(best, quat_angle(q, quaternion_from_matrix(r_gt * p)));
  }
  return best;
}

double err_quat(const BoxParams& pred, const BoxParams& gt, SymmetryMode mode) {
  return err_quat(to_quaternion(pred.rot), to_quaternion(gt.rot), mode);
}

double err_center(const Vec3& c, const Vec3& c_gt) { return (c - c_gt).norm(); }

ObjectMetrics evaluate_pair(const EvalPair& p) {
  ObjectMetrics m;
  m.id = p.id;
  m.method = p.method;
  m.iou = iou(p.pred, p.gt);
  const IogResult g = iog_checked(p.pred, p.gt);
  m.iog = g.value;
  m.degenerate_gt = g.degenerate_gt;
  m.f1 = f1(m.iou, m.iog);
  m.err_dim = err_dim(p.pred.dims, p.gt.dims);
  m.err_quat = err_quat(p.pred, p.gt, p.symmetry);
  m.err_center = err_center(p.pred.center, p.gt.center);
  m.score = p.score;
  return m;
}

std::vector<AggregateMetrics> aggregate(std::span<const ObjectMetrics> rows) {
  std::vector<AggregateMetrics> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, inserted] = index.emplace(r.method, out.size());
    if (inserted) out.push_back({.method = r.method});
    AggregateMetrics& a = out[it->second];
    ++a.n;
    a.mean_iou += r.iou;
    a.mean_iog += r.iog;
    a.err_dim += r.err_dim;
    a.err_quat += r.err_quat;
    a.err_center += r.err_center;
  }
  for (auto& a : out) {
    const double n = static_cast<double>(a.n);
    a.mean_iou /= n;
    a.mean_iog /= n;
    a.err_dim /= n;
    a.err_quat /= n;
    a.err_center /= n;
    a.f1 = f1(a.mean_iou, a.mean_iog);
  }
  return out;
}

std::vector<CurvePoint> containment_curve(std::span<const CurveSample> samples) {
  std::map<double, std::pair<std::size_t, std::size_t>> by_q;
  for (const auto& s : samples) {
    auto& [hits, n] = by_q[s.q];
    ++n;
    if (iog(s.pred, s.gt) > kContainmentIog) ++hits;
  }
  std::vector<CurvePoint> out;
  for (const auto& [q, c] : by_q) out.push_back({q, static_cast<double>(c.first) / c.second, c.second});
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

UncertaintyQuality uncertainty_quality(std::span<const double> scores, std::span<const double> ious,
                                       double iou_threshold) {
  if (scores.size() != ious.size()) throw Error("scores and ious differ in length");
  if (scores.size() < 2) throw Error("uncertainty quality needs at least 2 pairs");
  UncertaintyQuality out;
  const auto score_ranks = average_ranks(scores);

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (ious[i] < iou_threshold) {
      pos_rank_sum += score_ranks[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos > 0 && n_neg > 0) {
    const double np = static_cast<double>(n_pos);
    out.roc_auc = (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
  }

  const auto iou_ranks = average_ranks(ious);
  const double n = static_cast<double>(scores.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double a = score_ranks[i] - mean;
    const double b = iou_ranks[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx > 0.0 && syy > 0.0) out.spearman = sxy / std::sqrt(sxx * syy);
  return out;
}

double gaussian_uncertainty(const Vec3& mu, const Vec3& sigma) {
  if (!(mu.minCoeff() > 0.0)) throw Error("gaussian uncertainty needs positive dimension means");
  return sigma.prod() / mu.prod();
}

double gaussian_uncertainty(const GaussianBaseline& g, const Context& ctx) {
  g.check_context(ctx);
  const auto& p = g.params(ctx.id);
  const Vec3 mu(p.mean[kDimX], p.mean[kDimY], p.mean[kDimZ]);
  const Vec3 sigma(g.sigma(ctx.id, kDimX), g.sigma(ctx.id, kDimY), g.sigma(ctx.id, kDimZ));
  return gaussian_uncertainty(mu, sigma);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_rows_csv(std::ostream& out, std::span<const ObjectMetrics> rows) {
  out << "id,method,iou,iog,f1,err_dim,err_quat,err_center,score\n";
  for (const auto& r : rows) {
    out << r.id << ',' << r.method << ',' << num(r.iou) << ',' << num(r.iog) << ',' << num(r.f1) << ','
        << num(r.err_dim) << ',' << num(r.err_quat) << ',' << num(r.err_center) << ','
        << (r.score ? num(*r.score) : std::string()) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateMetrics> rows) {
  out << "method,n,mean_iou,mean_iog,f1,err_dim,err_quat,err_center\n";
  for (const auto& a : rows) {
    out << a.method << ',' << a.n << ',' << num(a.mean_iou) << ',' << num(a.mean_iog) << ',' << num(a.f1) << ','
        << num(a.err_dim) << ',' << num(a.err_quat) << ',' << num(a.err_center) << '\n';
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "q,f,n\n";
  for (const auto& c : curve) out << num(c.q) << ',' << num(c.f) << ',' << c.n << '\n';
}

}  // namespace boxcast
