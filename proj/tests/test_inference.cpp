#include <doctest.h>

#include <set>

#include <boxcast/error.hpp>
#include <boxcast/fit.hpp>
#include <boxcast/inference.hpp>

#include "support.hpp"

using namespace boxcast;
using namespace testing;

namespace {

constexpr double kH = 0.8;
constexpr double kTop = 0.5;

// Boxes of height H / i hanging from a shared top face, innermost first.
std::vector<BoxParams> four_height_boxes() {
  std::vector<BoxParams> out;
  for (int i = 4; i >= 1; --i) out.push_back(axis_box({0.4, 0.3, kH / i}, {0.1, -0.2, kTop - kH / (2 * i)}));
  return out;
}

std::shared_ptr<OrderedAnalytic> four_height() {
  return std::make_shared<OrderedAnalytic>(BoxSpace{}, four_height_boxes(), std::vector<double>(4, 0.25));
}

// Exhaustive argmax over tuples whose `active` parameters range over all bins.
std::pair<QuantizedBox, double> brute_argmax(const BoxDistribution& d, const std::vector<int>& active,
                                              const Context& ctx = {}) {
  QuantizedBox best;
  double best_lp = -std::numeric_limits<double>::infinity();
  for_each_tuple(d.bins(), active, [&](const QuantizedBox& qb) {
    const double lp = log_prob(d, qb, ctx);
    if (lp > best_lp) {
      best_lp = lp;
      best = qb;
    }
  });
  return {best, best_lp};
}

// First `active` chain steps random for every prefix, the rest one-hot at 0.
std::shared_ptr<ExplicitChain> random_chain(Rng& rng, int bins, int active, double power) {
  auto chain = std::make_shared<ExplicitChain>(small_space(bins));
  std::vector<double> hot(bins, 0.0);
  hot[0] = 1.0;
  for (int s = active; s < kNumParams; ++s) chain->set_default(s, hot);
  std::vector<int> prefix;
  auto fill = [&](auto&& self, int step) -> void {
    if (step == active) return;
    chain->set_row(0, prefix, random_row(rng, bins, power));
    for (int b = 0; b < bins; ++b) {
      prefix.push_back(b);
      self(self, step + 1);
      prefix.pop_back();
    }
  };
  fill(fill, 0);
  return chain;
}

std::shared_ptr<OccupancySample> handmade_sample(std::vector<BoxParams> boxes) {
  auto s = std::make_shared<OccupancySample>();
  s->boxes = std::move(boxes);
  for (const auto& b : s->boxes)
    for (const Vec3& c : corners(b)) s->points.push_back(c);
  s->occupancy = estimate_occupancy(s->points, s->boxes);
  return s;
}

}  // namespace

TEST_CASE("beam search on a point mass") {
  const QuantizedBox support = tuple_of({5, 1, 7, 0, 3, 2, 6, 4, 1});
  const auto chain = ExplicitChain::point_mass(small_space(8), support);
  for (int w : {1, 4, 8}) {
    const BeamResult r = beam_search(*chain, {}, {w});
    CHECK(r.box == support);
    CHECK(r.log_prob == 0.0);
  }
}

TEST_CASE("beam width must lie in [1, bins]") {
  const auto chain = ExplicitChain::uniform(small_space(4));
  CHECK_THROWS_AS(beam_search(*chain, {}, {0}), Error);
  CHECK_THROWS_AS(beam_search(*chain, {}, {5}), Error);
}

TEST_CASE("beam with width = bins recovers the exhaustive argmax") {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    const int bins = 2 + t % 7;
    const auto chain = random_chain(rng, bins, 3, 2.0);
    const auto [best, best_lp] = brute_argmax(*chain, {kDimX, kDimY, kDimZ});
    const BeamResult r = beam_search(*chain, {}, {bins});
    CHECK(r.log_prob == doctest::Approx(best_lp).epsilon(1e-12));
    CHECK(r.box == best);
    CHECK(r.log_prob == log_prob(*chain, r.box, {}));
  }
}

TEST_CASE("greedy decoding falls into a trap that a wider beam avoids") {
  // Step 0: bin 0 has 0.6, bin 1 has 0.4. After bin 0 the next step is
  // spread over 8 bins (joint 0.075 each); after bin 1 it is certain (0.4).
  auto chain = std::make_shared<ExplicitChain>(small_space(8));
  chain->set_default(0, {0.6, 0.4, 0, 0, 0, 0, 0, 0});
  chain->set_row(0, {0}, std::vector<double>(8, 0.125));
  chain->set_row(0, {1}, {0, 0, 0, 0, 0, 0, 1.0, 0});
  std::vector<double> hot(8, 0.0);
  hot[0] = 1.0;
  for (int s = 2; s < kNumParams; ++s) chain->set_default(s, hot);

  const auto [best, best_lp] = brute_argmax(*chain, {kDimX, kDimY});
  CHECK(best.indices[kDimX] == 1);
  CHECK(best.indices[kDimY] == 6);
  CHECK(best_lp == doctest::Approx(std::log(0.4)));

  const BeamResult greedy = beam_search(*chain, {}, {1});
  CHECK(greedy.box.indices[kDimX] == 0);
  CHECK(greedy.log_prob == doctest::Approx(std::log(0.075)));
  const BeamResult wide = beam_search(*chain, {}, {8});
  CHECK(wide.box == best);
}

TEST_CASE("beam ties go to the lowest bins") {
  const auto chain = ExplicitChain::uniform(small_space(4));
  const BeamResult r = beam_search(*chain, {}, {3});
  CHECK(r.box == QuantizedBox{});
}

TEST_CASE("estimate_occupancy basics") {
  const std::vector<BoxParams> boxes{axis_box({2, 2, 2}, {0, 0, 0}), axis_box({1, 1, 1}, {0, 0, 0})};
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(5, 0, 0), Vec3(0.8, 0, 0)};
  const auto occ = estimate_occupancy(pts, boxes);
  CHECK(occ[0] == 1.0);
  CHECK(occ[1] == 0.0);
  CHECK(occ[2] == 0.5);
  CHECK_THROWS_AS(estimate_occupancy(pts, std::vector<BoxParams>{}), Error);
}

TEST_CASE("stacked heights: occupancy between H/4 and H/3 below the top is 0.75") {
  const auto boxes = four_height_boxes();
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    // Depth below the top face in (H/4, H/3].
    const double depth = kH / 4 + (kH / 3 - kH / 4) * (1.0 - uniform01(rng));
    const Vec3 x(0.1 + uniform(rng, -0.2, 0.2), -0.2 + uniform(rng, -0.15, 0.15), kTop - depth);
    int inside = 0;
    for (const auto& b : boxes) inside += depth <= b.dims.z() + 1e-12;
    CHECK(inside == 3);
    const std::vector<Vec3> one{x};
    CHECK(estimate_occupancy(one, boxes)[0] == 0.75);
  }
}

TEST_CASE("stacked heights quantile boxes") {
  const auto d = four_height();
  const std::vector<std::pair<double, int>> cases{{0.6, 2}, {0.2, 0}, {0.8, 3}};
  for (const auto& [q, height_div] : cases) {
    CAPTURE(q);
    const QuantileResult r = quantile_box(*d, {}, {q, 1024, 64, 77});
    const double expected_height = height_div == 0 ? kH : kH / (height_div + 1);
    CHECK(r.box.dims.z() == doctest::Approx(expected_height).epsilon(1e-9));
    CHECK(r.box.dims.x() == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(r.box.dims.y() == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(r.box.center.z() + r.box.dims.z() / 2 == doctest::Approx(kTop).epsilon(1e-9));
  }
}

TEST_CASE("quantile box of a deterministic distribution is the support box") {
  const BoxSpace space;
  Rng rng(7);
  for (int t = 0; t < 5; ++t) {
    BoxParams b = random_box(rng, 0.2, 0.8, 0.5);
    const QuantizedBox qb = quantize_box(b, space);
    const auto chain = ExplicitChain::point_mass(space, qb);
    const BoxParams support = chain->decode(qb);
    for (double q : {0.1, 0.5, 0.9}) {
      const QuantileResult r = quantile_box(*chain, {}, {q, 8, 27, 1});
      CHECK(iou(r.box, support) > 1 - 1e-9);
      CHECK(iou(r.box, b) > 0.95);
    }
  }
}

TEST_CASE("quantile result invariants") {
  Rng rng(9);
  FitConfig cfg;
  cfg.space.quantizer.bins = 64;
  std::vector<TrainingExample> data;
  for (int i = 0; i < 40; ++i) {
    TrainingExample ex;
    ex.gt = random_box(rng, 0.2, 0.6, 0.3);
    data.push_back(ex);
  }
  const std::vector<DistributionPtr> models{fit_tabular(data, cfg), fit_gaussian(data, cfg), four_height()};
  for (const auto& d : models) {
    CAPTURE(d->backend());
    auto sample = std::make_shared<const OccupancySample>(draw_occupancy_sample(*d, {}, 64, 64, 3));
    double prev_volume = std::numeric_limits<double>::infinity();
    std::vector<int> prev_set;
    for (double q = 0.05; q < 0.99; q += 0.05) {
      QuantileResult r;
      try {
        r = quantile_box_from_sample(sample, q);
      } catch (const QuantileError&) {
        continue;
      }
      for (int p : r.quantile_points) {
        CHECK(sample->occupancy[p] > q);
        const Vec3 local = rotation_matrix(r.box.rot).transpose() * (sample->points[p] - r.box.center);
        CHECK(((local.cwiseAbs() - 0.5 * r.box.dims).array() <= 1e-6).all());
      }
      CHECK(r.box.volume() <= prev_volume + 1e-9);
      if (!prev_set.empty()) CHECK(std::includes(prev_set.begin(), prev_set.end(), r.quantile_points.begin(), r.quantile_points.end()));
      prev_volume = r.box.volume();
      prev_set = r.quantile_points;
    }
  }
}

TEST_CASE("quantile box picks the best sampled rotation") {
  // One long thin box at 30 degrees and one small cube inside it: the
  // rotated frame fits Q(q) far tighter than the axis-aligned one.
  const BoxParams slab = axis_box({2.0, 0.2, 0.2}, {0, 0, 0}, kPi / 6);
  const BoxParams cube = axis_box({0.1, 0.1, 0.1}, {0, 0, 0});
  const auto sample = handmade_sample({cube, slab});
  const QuantileResult r = quantile_box_from_sample(sample, 0.3);
  CHECK(r.rotation_index == 1);
  CHECK(iou(r.box, slab) > 1 - 1e-9);
}

TEST_CASE("empty quantile set is an error") {
  const auto sample = handmade_sample({axis_box({1, 1, 1}, {0, 0, 0}), axis_box({1, 1, 1}, {5, 0, 0})});
  CHECK_NOTHROW(quantile_box_from_sample(sample, 0.4));
  CHECK_THROWS_WITH_AS(quantile_box_from_sample(sample, 0.5), "quantile too high for sample", QuantileError);
  CHECK_THROWS_AS(quantile_box_from_sample(sample, 1.0), Error);
  CHECK_THROWS_AS(quantile_box_from_sample(sample, 0.0), Error);
}

TEST_CASE("occupancy sample layout and stratification") {
  const auto d = four_height();
  const OccupancySample s = draw_occupancy_sample(*d, {}, 10, 27, 5);
  REQUIRE(s.boxes.size() == 10);
  REQUIRE(s.points.size() == 10 * (27 + 8));
  for (int i = 0; i < 10; ++i) {
    const BoxParams& b = s.boxes[i];
    std::set<int> cells;
    for (int j = 0; j < 27; ++j) {
      const Vec3 local = rotation_matrix(b.rot).transpose() * (s.points[i * 35 + j] - b.center);
      const Vec3 unit = local.cwiseQuotient(b.dims) + Vec3::Constant(0.5);
      const Eigen::Vector3i c = (unit * 3).array().floor().cast<int>();
      REQUIRE((c.array() >= 0).all());
      REQUIRE((c.array() < 3).all());
      cells.insert(c.x() + 3 * c.y() + 9 * c.z());
    }
    CHECK(cells.size() == 27);
    const auto cs = corners(b);
    for (int j = 0; j < 8; ++j) CHECK((s.points[i * 35 + 27 + j] - cs[j]).norm() == 0.0);
  }
  const OccupancySample u = draw_occupancy_sample(*d, {}, 4, 10, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 18; ++j) CHECK(contains_point(u.boxes[i], u.points[i * 18 + j]));
  CHECK_THROWS_AS(draw_occupancy_sample(*d, {}, 1, 10, 5), Error);
  CHECK_THROWS_AS(draw_occupancy_sample(*d, {}, 4, 0, 5), Error);
}

TEST_CASE("fast occupancy equals the direct estimate") {
  Rng rng(11);
  FitConfig cfg;
  cfg.space.quantizer.bins = 32;
  cfg.space.symmetry = SymmetryMode::yaw;
  std::vector<TrainingExample> data;
  for (int i = 0; i < 12; ++i) {
    TrainingExample ex;
    ex.gt = random_box(rng, 0.2, 0.6, 0.3);
    ex.gt.rot.pitch = ex.gt.rot.roll = 0.0;
    ex.symmetry = SymmetryMode::yaw;
    data.push_back(ex);
  }
  FitConfig full = cfg;
  full.space.symmetry = SymmetryMode::none;
  std::vector<TrainingExample> rotated;
  for (int i = 0; i < 12; ++i) {
    TrainingExample ex;
    ex.gt = random_box(rng, 0.2, 0.6, 0.3);
    rotated.push_back(ex);
  }
  const std::vector<DistributionPtr> models{fit_tabular(data, cfg), fit_gaussian(rotated, full), four_height(),
                                            fit_tabular(rotated, full)};
  for (const auto& d : models) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const OccupancySample s = draw_occupancy_sample(*d, {}, 64, 64, seed);
      const auto direct = estimate_occupancy(s.points, s.boxes);
      REQUIRE(direct.size() == s.occupancy.size());
      std::size_t mismatches = 0;
      for (std::size_t p = 0; p < direct.size(); ++p) mismatches += direct[p] != s.occupancy[p];
      CHECK(mismatches == 0);
    }
  }
}

TEST_CASE("quantile boxes are deterministic given the seed") {
  const auto d = four_height();
  Rng rng(13);
  FitConfig cfg;
  std::vector<TrainingExample> data;
  for (int i = 0; i < 10; ++i) {
    TrainingExample ex;
    ex.gt = random_box(rng, 0.2, 0.6, 0.3);
    data.push_back(ex);
  }
  const auto g = fit_gaussian(data, cfg);
  for (const BoxDistribution* m : {static_cast<const BoxDistribution*>(d.get()), static_cast<const BoxDistribution*>(g.get())}) {
    const QuantileResult a = quantile_box(*m, {}, {0.5, 64, 64, 42});
    const QuantileResult b = quantile_box(*m, {}, {0.5, 64, 64, 42});
    CHECK(a.box == b.box);
    CHECK(a.rotation_index == b.rotation_index);
    CHECK(a.quantile_points == b.quantile_points);
    CHECK(a.sample->points == b.sample->points);
    CHECK(a.sample->occupancy == b.sample->occupancy);
    CHECK(a.sample->boxes == b.sample->boxes);
    const QuantileResult c = quantile_box(*m, {}, {0.5, 64, 64, 43});
    CHECK_FALSE(c.sample->points == a.sample->points);
  }
}

TEST_CASE("uncertainty measure") {
  SUBCASE("deterministic distribution gives 0") {
    const auto chain = ExplicitChain::point_mass(BoxSpace{}, quantize_box(axis_box({0.5, 0.4, 0.3}, {0, 0, 0}), BoxSpace{}));
    CHECK(uncertainty_measure(*chain, {}, 0.2, 0.8, {0.5, 16, 64, 3}) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("cube and double-height box give 0.5") {
    const OrderedAnalytic d(BoxSpace{}, {axis_box({1, 1, 1}, {0.5, 0.5, 0.5}), axis_box({1, 1, 2}, {0.5, 0.5, 1.0})},
                            {0.5, 0.5});
    // Occupancy is 1 on the cube and 1/2 above it.
    CHECK(uncertainty_measure(d, {}, 0.2, 0.8, {0.5, 256, 64, 5}) == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("non-increasing as alpha approaches beta") {
    const auto d = four_height();
    auto s = std::make_shared<const OccupancySample>(draw_occupancy_sample(*d, {}, 512, 64, 9));
    double prev = 1.0;
    for (double a = 0.05; a < 0.8; a += 0.05) {
      const double u = uncertainty_from_sample(s, a, 0.8);
      CHECK(u <= prev + 1e-12);
      prev = u;
    }
  }
  SUBCASE("argument checks") {
    const auto d = four_height();
    CHECK_THROWS_AS(uncertainty_measure(*d, {}, 0.8, 0.2, {}), Error);
    CHECK_THROWS_AS(uncertainty_measure(*d, {}, 0.0, 0.2, {}), Error);
  }
}

TEST_CASE("dimension-conditioned prediction") {
  const int bins = 8;
  BoxSpace space = small_space(bins);

  SUBCASE("one SKU equal to the beam dims reproduces beam search") {
    Rng rng(15);
    for (int t = 0; t < 10; ++t) {
      const DistributionPtr chain = random_chain(rng, bins, 5, 3.0);
      const BeamResult plain = beam_search(*chain, {}, {bins});
      const Vec3 dims = chain->decode(plain.box).dims;
      const std::vector<Vec3> skus{dims};
      const ConditionedResult c = dimension_conditioned_predict(chain, {}, skus, {bins}, false);
      CHECK(c.box == plain.box);
      CHECK(c.sku_index == 0);
      CHECK(c.score == plain.log_prob);
      CHECK_FALSE(c.dims_overflow);
    }
  }

  SUBCASE("duplicate SKUs change nothing") {
    Rng rng(17);
    const DistributionPtr chain = random_chain(rng, bins, 5, 3.0);
    const std::vector<Vec3> one{Vec3(0.3, 0.6, 0.1)};
    const std::vector<Vec3> many(4, one[0]);
    const ConditionedResult a = dimension_conditioned_predict(chain, {}, one, {4});
    const ConditionedResult b = dimension_conditioned_predict(chain, {}, many, {4});
    CHECK(a.box == b.box);
    CHECK(a.score == b.score);
    CHECK(b.sku_index == 0);
  }

  SUBCASE("context decides between a short and a tall SKU") {
    // Two contexts with the same footprint; context 1 favours tall objects.
    FitConfig cfg;
    cfg.alpha = 0.01;
    cfg.prefix_buckets = bins;
    cfg.space = space;
    const Vec3 short_dims(0.4, 0.3, 0.2), tall_dims(0.4, 0.3, 0.7);
    std::vector<TrainingExample> data;
    for (int ctx : {0, 1}) {
      for (int i = 0; i < 10; ++i) {
        const bool tall = ctx == 1 ? i < 7 : i < 3;
        const Vec3 d = tall ? tall_dims : short_dims;
        TrainingExample ex;
        ex.context.id = ctx;
        ex.gt = axis_box(d, {0.0, 0.0, 0.8 - d.z() / 2});
        data.push_back(ex);
      }
    }
    const DistributionPtr model = fit_tabular(data, cfg);
    const std::vector<Vec3> skus{short_dims, tall_dims};
    for (int ctx : {0, 1}) {
      const ConditionedResult c = dimension_conditioned_predict(model, {ctx, {}}, skus, {bins});
      // Oracle: for each SKU axis order, the best completion by enumeration.
      int best_sku = -1;
      double best = -std::numeric_limits<double>::infinity();
      QuantizedBox best_box;
      for (int s = 0; s < 2; ++s) {
        std::array<int, 3> perm{0, 1, 2};
        do {
          QuantizedBox pinned;
          for (int a = 0; a < 3; ++a) pinned.indices[a] = space.quantizer.index_of(a, skus[s][perm[a]]);
          for_each_tuple(bins, {kCenterX, kCenterY, kCenterZ, kYaw}, [&](QuantizedBox qb) {
            for (int a = 0; a < 3; ++a) qb.indices[a] = pinned.indices[a];
            for (int p : {kPitch, kRoll}) qb.indices[p] = space.quantizer.index_of(p, 0.0);
            const double lp = log_prob(*model, qb, {ctx, {}});
            if (lp > best) {
              best = lp;
              best_sku = s;
              best_box = qb;
            }
          });
        } while (std::next_permutation(perm.begin(), perm.end()));
      }
      CHECK(best_sku == (ctx == 1 ? 1 : 0));
      CHECK(c.sku_index == best_sku);
      CHECK(c.box == best_box);
      CHECK(c.score == doctest::Approx(best).epsilon(1e-12));
    }
  }

  SUBCASE("axis order of a SKU is searched") {
    FitConfig cfg;
    cfg.alpha = 0.01;
    cfg.space = space;
    std::vector<TrainingExample> data(5);
    for (auto& ex : data) ex.gt = axis_box({0.6, 0.2, 0.4}, {0, 0, 0});
    const DistributionPtr model = fit_tabular(data, cfg);
    const std::vector<Vec3> skus{Vec3(0.2, 0.4, 0.6)};
    const ConditionedResult c = dimension_conditioned_predict(model, {}, skus, {bins});
    CHECK(model->decode(c.box).dims.isApprox(model->decode(quantize_box(data[0].gt, space)).dims));
    const ConditionedResult fixed = dimension_conditioned_predict(model, {}, skus, {bins}, false);
    CHECK(fixed.score < c.score);
  }

  SUBCASE("overflowing SKU dims are flagged") {
    const DistributionPtr chain = ExplicitChain::uniform(space);
    const std::vector<Vec3> skus{Vec3(1.5, 0.2, 0.2)};
    CHECK(dimension_conditioned_predict(chain, {}, skus, {2}).dims_overflow);
    CHECK_THROWS_AS(dimension_conditioned_predict(chain, {}, std::vector<Vec3>{}, {2}), Error);
  }
}
