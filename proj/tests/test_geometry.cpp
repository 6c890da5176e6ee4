#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "cnav/geometry.hpp"
#include "support.hpp"

using namespace cnav;

namespace {

RobotModel weaver_model() {
  RobotModel m;  // defaults are the simulated Weaver-scale box
  return m;
}

}  // namespace

TEST_CASE("collision point generation reproduces the 84-point layout") {
  const auto pts = generate_collision_points(weaver_model());
  CHECK(pts.size() == 84);

  // no duplicates
  std::set<std::tuple<int, int, int>> keys;
  for (const auto& p : pts)
    keys.insert({int(std::lround(p.cx * 1e6)), int(std::lround(p.cy * 1e6)),
                 int(std::lround(p.cz * 1e6))});
  CHECK(keys.size() == pts.size());

  // all 8 vertices present
  int vertices = 0;
  for (const auto& p : pts)
    if (std::abs(std::abs(p.cx) - 1.0) < 1e-12 && std::abs(std::abs(p.cy) - 1.0) < 1e-12 &&
        (std::abs(p.cz) < 1e-12 || std::abs(p.cz - 1.0) < 1e-12))
      ++vertices;
  CHECK(vertices == 8);

  // coefficient ranges
  for (const auto& p : pts) {
    CHECK(p.cx >= -1.0);
    CHECK(p.cx <= 1.0);
    CHECK(p.cy >= -1.0);
    CHECK(p.cy <= 1.0);
    CHECK(p.cz >= 0.0);
    CHECK(p.cz <= 1.0);
  }
}

TEST_CASE("edge spacing stays below sphere diameter") {
  const auto m = weaver_model();
  const auto pts = generate_collision_points(m);
  // points on the bottom front edge (cy=-1..1 at cx=1, cz=0) sorted by cy
  std::vector<double> ys;
  for (const auto& p : pts)
    if (std::abs(p.cx - 1.0) < 1e-12 && std::abs(p.cz) < 1e-12) ys.push_back(p.cy * m.s_nom);
  std::sort(ys.begin(), ys.end());
  REQUIRE(ys.size() >= 2);
  for (size_t i = 1; i < ys.size(); ++i)
    CHECK(ys[i] - ys[i - 1] <= 2.0 * m.collision_radius + 1e-12);
}

TEST_CASE("point set is symmetric under cx and cy sign flips") {
  const auto pts = generate_collision_points(weaver_model());
  std::set<std::tuple<int, int, int>> keys;
  auto key = [](double cx, double cy, double cz) {
    return std::tuple{int(std::lround(cx * 1e6)), int(std::lround(cy * 1e6)),
                      int(std::lround(cz * 1e6))};
  };
  for (const auto& p : pts) keys.insert(key(p.cx, p.cy, p.cz));
  for (const auto& p : pts) {
    CHECK(keys.count(key(-p.cx, p.cy, p.cz)) == 1);
    CHECK(keys.count(key(p.cx, -p.cy, p.cz)) == 1);
  }
}

TEST_CASE("degenerate radius is rejected") {
  auto m = weaver_model();
  m.collision_radius = m.l0 / 2.0;
  CHECK_THROWS_AS(generate_collision_points(m), std::invalid_argument);
}

TEST_CASE("span/height coupling") {
  const auto m = weaver_model();
  CHECK(span_of_z(m, m.z_nom) == doctest::Approx(m.s_nom).epsilon(1e-12));
  // raising the body to the limit narrows the span to its minimum
  CHECK(span_of_z(m, 0.299) == doctest::Approx(0.251).epsilon(1e-9));

  auto decoupled = m;
  decoupled.coupling_gain = 0.0;
  for (double z : {0.0, 0.1, 0.25}) CHECK(span_of_z(decoupled, z) == m.s_nom);

  // inverse on the unclamped segment
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uz(m.z_min, m.z_max);
  for (int i = 0; i < 200; ++i) {
    const double z = uz(rng);
    const double s = span_of_z(m, z);
    if (s > m.s_min && s < m.s_max) CHECK(z_of_s(m, s) == doctest::Approx(z).epsilon(1e-12));
  }

  // monotone: raising the body never widens the span
  double prev = span_of_z(m, m.z_min);
  for (double z = m.z_min; z <= m.z_max; z += 0.001) {
    const double s = span_of_z(m, z);
    CHECK(s <= prev + 1e-15);
    prev = s;
  }
}

TEST_CASE("world transform of collision points") {
  auto m = weaver_model();

  SUBCASE("front-right-top vertex at identity pose") {
    Configuration cfg{0, 0, 0, 0, 0.41};
    CollisionPoint pt{1.0, -1.0, 1.0, 0.05};
    const Vec3 w = collision_point_world(cfg, pt, m);
    CHECK(w.x() == doctest::Approx(m.l0 / 2.0));
    CHECK(w.y() == doctest::Approx(-cfg.s));
    CHECK(w.z() == doctest::Approx(m.h0));
  }

  SUBCASE("rotated pose") {
    m.l0 = 0.6;
    m.h0 = 0.3;
    Configuration cfg{1.0, 2.0, 0.5, M_PI / 2.0, 0.4};
    CollisionPoint pt{1.0, -1.0, 1.0, 0.05};
    const Vec3 w = collision_point_world(cfg, pt, m);
    CHECK(w.x() == doctest::Approx(1.4));
    CHECK(w.y() == doctest::Approx(2.3));
    CHECK(w.z() == doctest::Approx(0.8));
  }

  SUBCASE("body-frame origin maps to position") {
    Configuration cfg{0, 0, 0, 0, 0.3};
    CollisionPoint pt{0, 0, 0, 0.05};
    CHECK(collision_point_world(cfg, pt, m).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("rigid-transform consistency: inter-point distances are pose invariant") {
  const auto m = weaver_model();
  const auto pts = generate_collision_points(m);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double s = 0.37;

  Configuration a{0, 0, 0, 0, s};
  Configuration b{u(rng), u(rng), std::abs(u(rng)) * 0.1, u(rng), s};
  for (int trial = 0; trial < 20; ++trial) {
    const size_t i = rng() % pts.size(), j = rng() % pts.size();
    const double da = (collision_point_world(a, pts[i], m) - collision_point_world(a, pts[j], m)).norm();
    const double db = (collision_point_world(b, pts[i], m) - collision_point_world(b, pts[j], m)).norm();
    CHECK(da == doctest::Approx(db).epsilon(1e-12));
  }
}

TEST_CASE("jacobian structure") {
  auto m = weaver_model();

  SUBCASE("first two columns are identity") {
    Configuration cfg{0.3, -0.2, 0.15, 0.7, 0.35};
    CollisionPoint pt{0.5, -1.0, 1.0, 0.05};
    const Mat35 J = collision_point_jacobian(cfg, pt, m);
    CHECK(J(0, 0) == 1.0);
    CHECK(J(1, 0) == 0.0);
    CHECK(J(2, 0) == 0.0);
    CHECK(J(0, 1) == 0.0);
    CHECK(J(1, 1) == 1.0);
    CHECK(J(2, 1) == 0.0);
  }

  SUBCASE("phi column at quarter turn") {
    m.l0 = 0.6;
    m.h0 = 0.3;
    m.coupling_gain = 0.0;
    Configuration cfg{1.0, 2.0, 0.5, M_PI / 2.0, 0.4};
    CollisionPoint pt{1.0, -1.0, 1.0, 0.05};
    const Mat35 J = collision_point_jacobian(cfg, pt, m);
    CHECK(J(0, 3) == doctest::Approx(-0.3));
    CHECK(J(1, 3) == doctest::Approx(0.4));
    CHECK(J(2, 3) == doctest::Approx(0.0));
  }
}

TEST_CASE("jacobian matches finite differences on random samples") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> upos(-2.0, 2.0);
  std::uniform_real_distribution<double> uang(-M_PI, M_PI);
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  std::uniform_real_distribution<double> ucz(0.0, 1.0);
  std::uniform_real_distribution<double> uk(-2.0, 0.0);
  std::uniform_real_distribution<double> us(0.26, 0.46);

  double max_rel = 0.0;
  for (int n = 0; n < 1000; ++n) {
    RobotModel m;
    m.coupling_gain = (n % 3 == 0) ? 0.0 : uk(rng);
    Configuration cfg{upos(rng), upos(rng), 0.1 + 0.1 * ucz(rng), uang(rng), us(rng)};
    CollisionPoint pt{uc(rng), uc(rng), ucz(rng), 0.05};

    const Mat35 J = collision_point_jacobian(cfg, pt, m);
    const Mat35 Jfd = testsupport::jacobian_fd(cfg, pt, m);
    for (int col = 0; col < 5; ++col) {
      const double denom = std::max(Jfd.col(col).norm(), 1e-9);
      max_rel = std::max(max_rel, (J.col(col) - Jfd.col(col)).norm() / denom);
    }
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("check model is the sphere-inscribed reduction") {
  auto m = weaver_model();
  m.span_offset = 0.0;
  const CheckModel cm = make_check_model(m);
  CHECK(cm.reduced.l0 == doctest::Approx(m.l0 - 0.1));
  CHECK(cm.reduced.h0 == doctest::Approx(m.h0 - 0.1));

  Configuration cfg{0, 0, 0.2, 0, 0.4};
  const Configuration cc = check_configuration(cm, cfg);
  CHECK(cc.z == doctest::Approx(0.25));
  CHECK(cc.s == doctest::Approx(0.35));

  // top of the reduced box sits one radius below the true box top
  CHECK(cc.z + cm.reduced.h0 == doctest::Approx(cfg.z + m.h0 - m.collision_radius));
}

TEST_CASE("angle normalization") {
  CHECK(normalize_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(normalize_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(normalize_angle(3.0 * M_PI) == doctest::Approx(M_PI));
  CHECK(normalize_angle(0.1) == doctest::Approx(0.1));
  CHECK(normalize_angle(2.0 * M_PI + 0.1) == doctest::Approx(0.1));
}
