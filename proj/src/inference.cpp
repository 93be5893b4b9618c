#include "boxcast/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "boxcast/error.hpp"
#include "boxcast/geometry.hpp"

namespace boxcast {

namespace {

struct Candidate {
  double score;
  int parent;
  int bin;
};

}  // namespace

BeamResult beam_search(const BoxDistribution& d, const Context& ctx, const BeamConfig& cfg) {
  d.check_context(ctx);
  if (cfg.beam_width < 1 || cfg.beam_width > d.bins()) {
    throw Error("beam width must lie in [1, bins]");
  }
  struct Hyp {
    std::array<int, kNumParams> chain{};
    double score = 0.0;
  };
  std::vector<Hyp> beam(1);
  std::vector<Candidate> cands;
  for (int step = 0; step < kNumParams; ++step) {
    cands.clear();
    for (int h = 0; h < static_cast<int>(beam.size()); ++h) {
      const auto probs = d.conditional(std::span<const int>(beam[h].chain.data(), step), ctx);
      for (int b = 0; b < d.bins(); ++b) {
        if (probs[b] > 0.0) cands.push_back({beam[h].score + std::log(probs[b]), h, b});
      }
    }
    if (cands.empty()) throw Error("beam search: every continuation has zero mass");
    // Ties: lowest prefix, compared lexicographically, then lowest bin.
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) {
        const auto& ca = beam[a.parent].chain;
        const auto& cb = beam[b.parent].chain;
        for (int i = 0; i < step; ++i) {
          if (ca[i] != cb[i]) return ca[i] < cb[i];
        }
      }
      return a.bin < b.bin;
    };
    const std::size_t keep = std::min<std::size_t>(cfg.beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), better);
    std::vector<Hyp> next(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      next[i].chain = beam[cands[i].parent].chain;
      next[i].chain[step] = cands[i].bin;
      next[i].score = cands[i].score;
    }
    beam = std::move(next);
  }
  return {from_chain_order(beam.front().chain, d.param_order()), beam.front().score};
}

namespace {

// Box in a layout suited to batch point tests: rows of R^T, center, and
// half extents padded by the containment tolerance.
struct BoxFrame {
  double r[9];
  double c[3];
  double h[3];
};

BoxFrame frame_of(const BoxParams& b) {
  BoxFrame f{};
  const Mat3 rt = b.rotation().transpose();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) f.r[3 * i + j] = rt(i, j);
    f.c[i] = b.center[i];
    f.h[i] = 0.5 * b.dims[i] + kContainmentTolerance;
  }
  return f;
}

// Adds `weight` to counts[p] for every point inside the box. Branch-free
// so the loop vectorizes; an AVX2 clone is picked at load time when the
// CPU has it.
#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
__attribute__((target_clones("avx2", "default")))
#endif
void accumulate_inside(const BoxFrame& f, const double* xs, const double* ys, const double* zs, std::size_t n,
                       double weight, double* counts) {
  const double r0 = f.r[0], r1 = f.r[1], r2 = f.r[2], r3 = f.r[3], r4 = f.r[4], r5 = f.r[5], r6 = f.r[6],
               r7 = f.r[7], r8 = f.r[8];
  const double c0 = f.c[0], c1 = f.c[1], c2 = f.c[2];
  const double h0 = f.h[0], h1 = f.h[1], h2 = f.h[2];
  for (std::size_t p = 0; p < n; ++p) {
    const double dx = xs[p] - c0;
    const double dy = ys[p] - c1;
    const double dz = zs[p] - c2;
    const double u = std::abs(r0 * dx + r1 * dy + r2 * dz) - h0;
    const double v = std::abs(r3 * dx + r4 * dy + r5 * dz) - h1;
    const double w = std::abs(r6 * dx + r7 * dy + r8 * dz) - h2;
    const double excess = std::max(std::max(u, v), w);
    counts[p] += excess <= 0.0 ? weight : 0.0;
  }
}

int cube_root_exact(int m) {
  int s = static_cast<int>(std::lround(std::cbrt(static_cast<double>(m))));
  return s * s * s == m ? s : 0;
}

void sample_points_in_box(const BoxParams& b, int m, Rng& rng, std::vector<Vec3>& out) {
  const Mat3 r = b.rotation();
  auto emit = [&](double u, double v, double w) {
    const Vec3 local((u - 0.5) * b.dims.x(), (v - 0.5) * b.dims.y(), (w - 0.5) * b.dims.z());
    out.push_back(b.center + r * local);
  };
  if (const int s = cube_root_exact(m); s > 0) {
    for (int iz = 0; iz < s; ++iz) {
      for (int iy = 0; iy < s; ++iy) {
        for (int ix = 0; ix < s; ++ix) {
          const double u = (ix + uniform01(rng)) / s;
          const double v = (iy + uniform01(rng)) / s;
          const double w = (iz + uniform01(rng)) / s;
          emit(u, v, w);
        }
      }
    }
  } else {
    for (int i = 0; i < m; ++i) {
      const double u = uniform01(rng);
      const double v = uniform01(rng);
      emit(u, v, uniform01(rng));
    }
  }
  for (const Vec3& c : corners(b)) out.push_back(c);
}

}  // namespace

std::vector<double> estimate_occupancy(std::span<const Vec3> points, std::span<const BoxParams> boxes) {
  if (boxes.empty()) throw Error("occupancy needs at least one box");
  const std::size_t n = points.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t p = 0; p < n; ++p) {
    xs[p] = points[p].x();
    ys[p] = points[p].y();
    zs[p] = points[p].z();
  }
  // Identical boxes are tested once and counted with multiplicity.
  std::vector<double> counts(n, 0.0);
  std::vector<std::pair<const BoxParams*, int>> unique;
  for (const auto& b : boxes) {
    auto it = std::find_if(unique.begin(), unique.end(), [&](const auto& u) { return *u.first == b; });
    if (it == unique.end()) {
      unique.emplace_back(&b, 1);
    } else {
      ++it->second;
    }
  }
  for (const auto& [b, mult] : unique) {
    accumulate_inside(frame_of(*b), xs.data(), ys.data(), zs.data(), n, mult, counts.data());
  }
  std::vector<double> occ(n);
  const double k = static_cast<double>(boxes.size());
  for (std::size_t p = 0; p < n; ++p) occ[p] = counts[p] / k;
  return occ;
}

namespace {

struct Placed {
  const BoxParams* box;
  Mat3 r;
  std::array<Vec3, 8> corners;
  BoxFrame frame;
};

Placed place(const BoxParams& b) {
  Placed p{&b, b.rotation(), {}, {}};
  for (int i = 0; i < 8; ++i) {
    const Vec3 s((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    p.corners[i] = b.center + p.r * s.cwiseProduct(b.dims);
  }
  p.frame = frame_of(b);
  return p;
}

// Same point set: equal centers and the same half-axis vectors up to sign
// and order (so yaw relabelings of one box collapse).
bool same_point_set(const Placed& a, const Placed& b) {
  if (*a.box == *b.box) return true;
  const double tol = 1e-12 * std::max(1.0, std::max(a.box->dims.maxCoeff(), a.box->center.cwiseAbs().maxCoeff()));
  if ((a.box->center - b.box->center).cwiseAbs().maxCoeff() > tol) return false;
  std::array<bool, 3> used{};
  for (int i = 0; i < 3; ++i) {
    const Vec3 ai = 0.5 * a.box->dims[i] * a.r.col(i);
    bool found = false;
    for (int j = 0; j < 3 && !found; ++j) {
      if (used[j]) continue;
      const Vec3 bj = 0.5 * b.box->dims[j] * b.r.col(j);
      if ((ai - bj).cwiseAbs().maxCoeff() <= tol || (ai + bj).cwiseAbs().maxCoeff() <= tol) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

enum class Relation { disjoint, inside, partial };

// How box s sits relative to box t, decided conservatively: inside when all
// corners of s pass t's containment test (the test region is convex),
// disjoint when the bounding spheres are apart.
Relation relate(const Placed& s, const Placed& t) {
  const double rs = 0.5 * s.box->dims.norm();
  const double rt = 0.5 * t.box->dims.norm();
  if ((s.box->center - t.box->center).norm() > rs + rt + 1e-6) return Relation::disjoint;
  double cx[8], cy[8], cz[8], cnt[8] = {};
  for (int i = 0; i < 8; ++i) {
    cx[i] = s.corners[i].x();
    cy[i] = s.corners[i].y();
    cz[i] = s.corners[i].z();
  }
  accumulate_inside(t.frame, cx, cy, cz, 8, 1.0, cnt);
  for (double c : cnt) {
    if (c == 0.0) return Relation::partial;
  }
  return Relation::inside;
}

}  // namespace

OccupancySample draw_occupancy_sample(const BoxDistribution& d, const Context& ctx, int k, int m,
                                      std::uint64_t seed) {
  if (k < 2) throw Error("quantile box needs k >= 2 samples");
  if (m < 1) throw Error("quantile box needs m >= 1 points per box");
  d.check_context(ctx);
  Rng rng(seed);
  OccupancySample s;
  s.m = m;
  s.seed = seed;
  s.boxes.reserve(k);
  for (int i = 0; i < k; ++i) s.boxes.push_back(d.sample_box(ctx, rng));
  const std::size_t per_box = static_cast<std::size_t>(m) + 8;
  s.points.reserve(k * per_box);
  for (const auto& b : s.boxes) sample_points_in_box(b, m, rng, s.points);

  // Points arrive in blocks, one per sampled box, so each (block, box)
  // pair is settled at once when one box contains the other or they are
  // apart. Only partial overlaps are tested point by point.
  std::vector<int> rep(k);
  std::vector<Placed> uniques;
  std::vector<double> mult;
  for (int i = 0; i < k; ++i) {
    int u = 0;
    if (i > 0 && s.boxes[i] == s.boxes[i - 1]) {
      u = rep[i - 1];
    } else {
      const Placed pi = place(s.boxes[i]);
      while (u < static_cast<int>(uniques.size()) && !same_point_set(uniques[u], pi)) ++u;
      if (u == static_cast<int>(uniques.size())) uniques.push_back(pi);
    }
    if (u == static_cast<int>(mult.size())) {
      mult.push_back(0.0);
    }
    mult[u] += 1.0;
    rep[i] = u;
  }
  const std::size_t n = s.points.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t p = 0; p < n; ++p) {
    xs[p] = s.points[p].x();
    ys[p] = s.points[p].y();
    zs[p] = s.points[p].z();
  }
  const std::size_t nu = uniques.size();
  std::vector<Relation> rel(nu * nu);
  for (std::size_t a = 0; a < nu; ++a) {
    for (std::size_t t = 0; t < nu; ++t) {
      rel[a * nu + t] = a == t ? Relation::inside : relate(uniques[a], uniques[t]);
    }
  }
  std::vector<double> counts(n, 0.0);
  for (std::size_t t = 0; t < nu; ++t) {
    const BoxFrame& f = uniques[t].frame;
    for (int j = 0; j < k; ++j) {
      const std::size_t lo = j * per_box;
      switch (rel[rep[j] * nu + t]) {
        case Relation::disjoint:
          break;
        case Relation::inside:
          for (std::size_t p = lo; p < lo + per_box; ++p) counts[p] += mult[t];
          break;
        case Relation::partial:
          accumulate_inside(f, xs.data() + lo, ys.data() + lo, zs.data() + lo, per_box, mult[t], counts.data() + lo);
          break;
      }
    }
  }
  s.occupancy.resize(n);
  for (std::size_t p = 0; p < n; ++p) s.occupancy[p] = counts[p] / k;
  return s;
}

QuantileResult quantile_box_from_sample(std::shared_ptr<const OccupancySample> sample, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error("quantile q must lie in (0, 1)");
  QuantileResult res;
  res.q = q;
  const auto& pts = sample->points;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    if (sample->occupancy[p] > q) res.quantile_points.push_back(static_cast<int>(p));
  }
  if (res.quantile_points.empty()) throw QuantileError("quantile too high for sample");

  const std::size_t n = res.quantile_points.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& x = pts[res.quantile_points[i]];
    xs[i] = x.x();
    ys[i] = x.y();
    zs[i] = x.z();
  }

  double best_volume = std::numeric_limits<double>::infinity();
  Vec3 best_lo, best_hi;
  std::vector<const EulerZYX*> tried;
  for (int i = 0; i < static_cast<int>(sample->boxes.size()); ++i) {
    const EulerZYX& rot = sample->boxes[i].rot;
    if (std::any_of(tried.begin(), tried.end(), [&](const EulerZYX* t) { return *t == rot; })) continue;
    tried.push_back(&rot);
    const Mat3 rt = rotation_matrix(rot).transpose();
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int a = 0; a < 3; ++a) {
      const double r0 = rt(a, 0), r1 = rt(a, 1), r2 = rt(a, 2);
      double mn = lo[a], mx = hi[a];
      for (std::size_t p = 0; p < n; ++p) {
        const double v = r0 * xs[p] + r1 * ys[p] + r2 * zs[p];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      lo[a] = mn;
      hi[a] = mx;
    }
    const double vol = (hi - lo).prod();
    if (vol < best_volume) {
      best_volume = vol;
      best_lo = lo;
      best_hi = hi;
      res.rotation_index = i;
    }
  }
  const BoxParams& frame = sample->boxes[res.rotation_index];
  res.box.rot = frame.rot;
  res.box.dims = best_hi - best_lo;
  res.box.center = frame.rotation() * (best_lo + 0.5 * res.box.dims);
  res.sample = std::move(sample);
  return res;
}

QuantileResult quantile_box(const BoxDistribution& d, const Context& ctx, const QuantileConfig& cfg) {
  auto sample = std::make_shared<const OccupancySample>(draw_occupancy_sample(d, ctx, cfg.k, cfg.m, cfg.seed));
  return quantile_box_from_sample(std::move(sample), cfg.q);
}

double uncertainty_from_sample(const std::shared_ptr<const OccupancySample>& sample, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < beta && beta < 1.0)) throw Error("uncertainty needs 0 < alpha < beta < 1");
  const auto lo = quantile_box_from_sample(sample, alpha);
  const auto hi = quantile_box_from_sample(sample, beta);
  return 1.0 - iou(lo.box, hi.box);
}

double uncertainty_measure(const BoxDistribution& d, const Context& ctx, double alpha, double beta,
                           const QuantileConfig& cfg) {
  auto sample = std::make_shared<const OccupancySample>(draw_occupancy_sample(d, ctx, cfg.k, cfg.m, cfg.seed));
  return uncertainty_from_sample(sample, alpha, beta);
}

ConditionedResult dimension_conditioned_predict(const DistributionPtr& d, const Context& ctx,
                                                std::span<const Vec3> sku_dims, const BeamConfig& cfg,
                                                bool permute_axes) {
  if (sku_dims.empty()) throw Error("dimension conditioning needs at least one SKU");
  d->check_context(ctx);
  const auto& space = d->space();
  ConditionedResult best;
  for (int s = 0; s < static_cast<int>(sku_dims.size()); ++s) {
    std::array<int, 3> perm{0, 1, 2};
    std::vector<std::array<int, 3>> seen;
    do {
      const Vec3 metric(sku_dims[s][perm[0]], sku_dims[s][perm[1]], sku_dims[s][perm[2]]);
      const Vec3 norm = space.normalizer.normalize_dims(metric);
      std::array<int, 3> idx{};
      bool overflow = false;
      for (int a = 0; a < 3; ++a) {
        bool o = false;
        idx[a] = space.quantizer.index_of(kDimX + a, norm[a], &o);
        overflow = overflow || o;
      }
      if (std::find(seen.begin(), seen.end(), idx) != seen.end()) continue;
      seen.push_back(idx);
      const auto cond = condition_on_dims(d, idx, ctx);
      const BeamResult r = beam_search(*cond, ctx, cfg);
      const double score = log_prob(*d, r.box, ctx);
      if (best.sku_index < 0 || score > best.score) {
        best = {r.box, s, score, overflow};
      }
    } while (permute_axes && std::next_permutation(perm.begin(), perm.end()));
  }
  return best;
}

}  // namespace boxcast
