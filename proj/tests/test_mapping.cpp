#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "cnav/mapping.hpp"

using namespace cnav;

namespace {

MappingParams default_params() { return MappingParams{}; }

ElevationEstimate est(double mean, double var) { return {mean, var, true}; }

}  // namespace

TEST_CASE("kalman fusion") {
  SUBCASE("reference values") {
    const auto out = fuse(est(1.0, 0.04), 1.2, 0.01);
    CHECK(out.mean == doctest::Approx(1.16).epsilon(1e-12));
    CHECK(out.variance == doctest::Approx(0.008).epsilon(1e-12));
  }
  SUBCASE("equal variances average the means") {
    const auto out = fuse(est(0.3, 0.02), 0.7, 0.02);
    CHECK(out.mean == doctest::Approx(0.5));
    CHECK(out.variance == doctest::Approx(0.01));
  }
  SUBCASE("invalid estimate initializes from the measurement") {
    const auto out = fuse(ElevationEstimate{}, 0.5, 0.01);
    CHECK(out.valid);
    CHECK(out.mean == 0.5);
    CHECK(out.variance == 0.01);
  }
  SUBCASE("non-positive variance rejected") {
    CHECK_THROWS_AS(fuse(est(0.0, 0.01), 0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fuse(est(0.0, -0.01), 0.1, 0.01), std::invalid_argument);
  }
}

TEST_CASE("fusion variance strictly decreases") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uv(1e-6, 1.0);
  std::uniform_real_distribution<double> uh(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const auto prior = est(uh(rng), uv(rng));
    const double mv = uv(rng);
    const auto out = fuse(prior, uh(rng), mv);
    CHECK(out.variance < prior.variance);
    CHECK(out.variance < mv);
  }
}

TEST_CASE("fusion is order symmetric") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> uv(1e-4, 0.5);
  std::uniform_real_distribution<double> uh(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const auto prior = est(uh(rng), uv(rng));
    const double h1 = uh(rng), v1 = uv(rng);
    const double h2 = uh(rng), v2 = uv(rng);
    const auto a = fuse(fuse(prior, h1, v1), h2, v2);
    const auto b = fuse(fuse(prior, h2, v2), h1, v1);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-12));
  }
}

TEST_CASE("classification") {
  const auto p = default_params();
  SUBCASE("near floor, below body") {
    CHECK(classify(0.05, est(0.0, 0.05 * 0.05), ElevationEstimate{}, 0.30, p) ==
          PointClass::Floor);
  }
  SUBCASE("high point with no ceiling becomes a new ceiling") {
    CHECK(classify(0.80, est(0.0, 0.05 * 0.05), ElevationEstimate{}, 0.30, p) ==
          PointClass::NewCeiling);
  }
  SUBCASE("MAP pick between two valid layers") {
    const auto floor = est(0.0, 0.1 * 0.1);
    const auto ceiling = est(0.5, 0.1 * 0.1);
    CHECK(classify(0.10, floor, ceiling, 0.30, p) == PointClass::Floor);
    // likelihoods behind the decision
    CHECK(gaussian_likelihood(0.10, 0.0, 0.01) == doctest::Approx(2.420).epsilon(1e-3));
    CHECK(gaussian_likelihood(0.10, 0.5, 0.01) == doctest::Approx(1.34e-3).epsilon(1e-2));
  }
  SUBCASE("measurement above body never fuses into the floor") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uh(0.31, 2.0);
    for (int i = 0; i < 200; ++i) {
      const auto cls = classify(uh(rng), est(0.0, 0.01), ElevationEstimate{}, 0.30, p);
      CHECK(cls != PointClass::Floor);
      CHECK(cls != PointClass::NewFloor);
    }
  }
}

TEST_CASE("ingest of a flat synthetic floor") {
  MappingParams p;
  p.side_length = 2.0;
  MultiElevationMap map(p, 0.0, 0.0);

  std::vector<DepthMeasurement> points;
  for (double x = -0.9; x <= 0.9; x += 0.025)
    for (double y = -0.9; y <= 0.9; y += 0.025)
      points.push_back({{x, y, 0.0}, 0.01 * 0.01});

  const auto stats = map.ingest_scan(points, 0.30);
  CHECK(stats.dropped_outside == 0);
  CHECK(stats.new_floor > 0);
  CHECK(stats.new_ceiling == 0);

  int observed = 0;
  for (int idx = 0; idx < map.cells_per_side() * map.cells_per_side(); ++idx) {
    if (!map.floor(idx).valid) continue;
    ++observed;
    CHECK(std::abs(map.floor(idx).mean) < 0.01);
    CHECK_FALSE(map.ceiling(idx).valid);
  }
  CHECK(observed > 1000);
}

TEST_CASE("ingest of an overhang slab keeps both layers") {
  MappingParams p;
  p.side_length = 2.0;
  MultiElevationMap map(p, 0.0, 0.0);

  std::vector<DepthMeasurement> points;
  for (double x = -0.5; x <= 0.5; x += 0.02)
    for (double y = -0.5; y <= 0.5; y += 0.02) {
      points.push_back({{x, y, 0.0}, 1e-4});   // floor
      points.push_back({{x, y, 0.25}, 1e-4});  // slab underside
    }
  map.ingest_scan(points, 0.20);

  int both = 0;
  for (int idx = 0; idx < map.cells_per_side() * map.cells_per_side(); ++idx) {
    if (!map.floor(idx).valid || !map.ceiling(idx).valid) continue;
    ++both;
    CHECK(map.floor(idx).mean == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(map.ceiling(idx).mean == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(map.ceiling(idx).mean > map.floor(idx).mean);
  }
  CHECK(both > 100);
}

TEST_CASE("empty scan leaves the map unchanged") {
  MultiElevationMap map(default_params(), 0.0, 0.0);
  const auto stats = map.ingest_scan({}, 0.3);
  CHECK(stats.fused_floor == 0);
  CHECK(stats.new_floor == 0);
  for (int idx = 0; idx < map.cells_per_side() * map.cells_per_side(); ++idx)
    CHECK_FALSE(map.floor(idx).valid);
}

TEST_CASE("points outside the grid are dropped and counted") {
  MappingParams p;
  p.side_length = 1.0;
  MultiElevationMap map(p, 0.0, 0.0);
  const auto stats = map.ingest_scan({{{5.0, 0.0, 0.0}, 0.01}}, 0.3);
  CHECK(stats.dropped_outside == 1);
}

TEST_CASE("recenter") {
  MappingParams p;
  p.side_length = 2.0;
  p.resolution = 0.05;

  SUBCASE("less than one cell is a no-op") {
    MultiElevationMap map(p, 0.0, 0.0);
    map.ingest_scan({{{0.3, 0.3, 0.1}, 0.01}}, 0.5);
    auto before = map;
    map.recenter(0.02, -0.02);
    CHECK(map.center_x() == before.center_x());
    for (int i = 0; i < map.cells_per_side() * map.cells_per_side(); ++i) {
      CHECK(map.floor(i).valid == before.floor(i).valid);
      if (map.floor(i).valid) CHECK(map.floor(i).mean == before.floor(i).mean);
    }
  }

  SUBCASE("full side length invalidates everything") {
    MultiElevationMap map(p, 0.0, 0.0);
    std::vector<DepthMeasurement> pts;
    for (double x = -0.9; x <= 0.9; x += 0.05) pts.push_back({{x, 0.0, 0.0}, 0.01});
    map.ingest_scan(pts, 0.5);
    map.recenter(p.side_length, 0.0);
    for (int i = 0; i < map.cells_per_side() * map.cells_per_side(); ++i)
      CHECK_FALSE(map.floor(i).valid);
  }

  SUBCASE("one-meter shift matches naive re-insertion") {
    MultiElevationMap map(p, 0.0, 0.0);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-0.99, 0.99);
    std::vector<DepthMeasurement> pts;
    for (int i = 0; i < 2000; ++i) pts.push_back({{u(rng), u(rng), 0.2 * u(rng)}, 0.01});
    map.ingest_scan(pts, 0.5);

    auto shifted = map;
    shifted.recenter(1.0, 0.0);

    // naive oracle: fresh map at the new centre, same points in overlap
    MultiElevationMap oracle(p, 1.0, 0.0);
    oracle.ingest_scan(pts, 0.5);

    int compared = 0;
    for (int idx = 0; idx < shifted.cells_per_side() * shifted.cells_per_side(); ++idx) {
      const auto c = shifted.cell_center(idx);
      const int oidx = oracle.cell_index(c.x(), c.y());
      const int midx = map.cell_index(c.x(), c.y());
      if (midx < 0) continue;  // cell newly entered, must be invalid
      REQUIRE(oidx >= 0);
      CHECK(shifted.floor(idx).valid == oracle.floor(oidx).valid);
      if (shifted.floor(idx).valid) {
        CHECK(shifted.floor(idx).mean == oracle.floor(oidx).mean);
        CHECK(shifted.floor(idx).variance == oracle.floor(oidx).variance);
        ++compared;
      }
    }
    CHECK(compared > 100);
  }

  SUBCASE("cells entering the window are invalid") {
    MultiElevationMap map(p, 0.0, 0.0);
    std::vector<DepthMeasurement> pts;
    for (double x = -0.9; x <= 0.9; x += 0.04)
      for (double y = -0.9; y <= 0.9; y += 0.04) pts.push_back({{x, y, 0.0}, 0.01});
    map.ingest_scan(pts, 0.5);
    map.recenter(0.5, 0.0);
    for (int idx = 0; idx < map.cells_per_side() * map.cells_per_side(); ++idx) {
      const auto c = map.cell_center(idx);
      if (c.x() > 1.0) CHECK_FALSE(map.floor(idx).valid);
    }
  }
}

TEST_CASE("variance inflation applies to valid layers only") {
  MappingParams p;
  p.side_length = 1.0;
  MultiElevationMap map(p, 0.0, 0.0);
  map.ingest_scan({{{0.1, 0.1, 0.0}, 0.01}}, 0.5);
  const int idx = map.cell_index(0.1, 0.1);
  const double before = map.floor(idx).variance;
  map.inflate_variance(2.0);
  CHECK(map.floor(idx).variance == doctest::Approx(before + 2.0 * p.drift_variance));
}

TEST_CASE("layer separation survives ingest from a gapped world") {
  MappingParams p;
  p.side_length = 2.0;
  MultiElevationMap map(p, 0.0, 0.0);
  std::mt19937 rng(17);
  std::normal_distribution<double> noise(0.0, 0.01);
  // floor at 0, ceiling at 0.4, noisy interleaved observations
  for (int scan = 0; scan < 10; ++scan) {
    std::vector<DepthMeasurement> pts;
    for (double x = -0.5; x <= 0.5; x += 0.05)
      for (double y = -0.5; y <= 0.5; y += 0.05) {
        pts.push_back({{x, y, noise(rng)}, 1e-4});
        pts.push_back({{x, y, 0.4 + noise(rng)}, 1e-4});
      }
    map.ingest_scan(pts, 0.2);
  }
  for (int idx = 0; idx < map.cells_per_side() * map.cells_per_side(); ++idx)
    if (map.floor(idx).valid && map.ceiling(idx).valid)
      CHECK(map.ceiling(idx).mean > map.floor(idx).mean);
}

TEST_CASE("map dump round-trips") {
  MappingParams p;
  p.side_length = 1.0;
  MultiElevationMap map(p, 0.3, -0.2);
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::vector<DepthMeasurement> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({{u(rng), u(rng), 0.1}, 0.01});
  map.ingest_scan(pts, 0.5);

  std::stringstream ss;
  map.save(ss);
  const auto loaded = MultiElevationMap::load(ss);
  CHECK(loaded.center_x() == map.center_x());
  CHECK(loaded.cells_per_side() == map.cells_per_side());
  for (int i = 0; i < map.cells_per_side() * map.cells_per_side(); ++i) {
    CHECK(loaded.floor(i).valid == map.floor(i).valid);
    if (map.floor(i).valid) {
      CHECK(loaded.floor(i).mean == map.floor(i).mean);
      CHECK(loaded.floor(i).variance == map.floor(i).variance);
    }
  }
}
