#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "wmnav/geometry.hpp"

using namespace wmnav;

TEST_CASE("angle wrapping stays in range and preserves direction") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double a = test::uniform(rng, -50.0, 50.0);
    const double w2 = wrap_two_pi(a);
    const double w1 = wrap_pi(a);
    CHECK(w2 >= 0.0);
    CHECK(w2 < kTwoPi);
    CHECK(w1 > -kPi);
    CHECK(w1 <= kPi);
    CHECK(std::cos(w2) == doctest::Approx(std::cos(a)).epsilon(1e-9));
    CHECK(std::sin(w1) == doctest::Approx(std::sin(a)).epsilon(1e-9));
    const double b = test::uniform(rng, -10.0, 10.0);
    const double d = angular_distance(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= kPi + 1e-12);
    CHECK(std::cos(d) == doctest::Approx(std::cos(a - b)).epsilon(1e-9));
  }
}

TEST_CASE("grid cells round-trip through their centers") {
  const GridSpec grid = GridSpec::centered_on({3.0, -2.0}, 400, 0.1);
  CHECK(grid.origin().x == doctest::Approx(-17.0));
  CHECK(grid.world_to_cell({3.0, -2.0}) == Cell{200, 200});
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Cell c{int(rng() % 400), int(rng() % 400)};
    CHECK(grid.world_to_cell(grid.cell_to_world_center(c)) == c);
    CHECK(grid.cell_at(grid.index(c)) == c);
  }
  CHECK_FALSE(grid.in_bounds({-1, 0}));
  CHECK_FALSE(grid.in_bounds({0, 400}));
  CHECK_THROWS_AS(GridSpec(0, 0.1, {}), ContractViolation);
}

TEST_CASE("camera projection inverts pixel rays") {
  const CameraModel cam;
  CHECK(rad_to_deg(cam.hfov()) == doctest::Approx(79.0));
  // Square pixels: vertical fov follows from the aspect ratio.
  CHECK(std::tan(cam.vfov() / 2.0) == doctest::Approx(std::tan(cam.hfov() / 2.0) * 480.0 / 640.0));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const double u = test::uniform(rng, 0.0, 640.0), v = test::uniform(rng, 0.0, 480.0);
    const Vec3 d = cam.pixel_ray(u, v);
    CHECK(std::hypot(d.x, d.y, d.z) == doctest::Approx(1.0));
    const auto px = cam.project({d.x * 3.0, d.y * 3.0, d.z * 3.0});
    REQUIRE(px);
    CHECK((*px)[0] == doctest::Approx(u).epsilon(1e-9));
    CHECK((*px)[1] == doctest::Approx(v).epsilon(1e-9));
  }
  // The optical axis points down by the pitch.
  const Vec3 axis = cam.pixel_ray(320.0, 240.0);
  CHECK(std::atan2(-axis.z, axis.x) == doctest::Approx(deg_to_rad(14.0)));
  CHECK_FALSE(cam.project({-1.0, 0.0, 0.0}));
}

TEST_CASE("cell classification separates floor from obstacles") {
  const GridSpec grid(10, 0.1, {0.0, 0.0});
  std::vector<Vec3> pts{
      {0.05, 0.05, 0.0},   // floor
      {0.15, 0.05, 0.02},  // floor
      {0.15, 0.06, 0.5},   // obstacle in the same cell
      {0.25, 0.05, 1.5},   // above clearance: ignored
      {0.35, 0.05, 0.3},   // obstacle only
      {0.32, 0.08, 0.3},
      {5.0, 5.0, 0.0},     // off-grid
  };
  const CellClasses cc = classify_cells(pts, grid);
  CHECK(cc.navigable == CellSet{{0, 0}});
  CHECK(cc.obstacle == CellSet{{1, 0}, {3, 0}});
  REQUIRE(cc.obstacle_extents.size() == 2);
  CHECK(cc.obstacle_extents[1].min.x == doctest::Approx(0.32));
  CHECK(cc.obstacle_extents[1].max.y == doctest::Approx(0.08));
  CHECK(navigable_cells(pts, grid) == cc.navigable);
}

TEST_CASE("box distance matches a dense sample oracle") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    Box2 b;
    b.expand(Vec2{test::uniform(rng, -1, 1), test::uniform(rng, -1, 1)});
    b.expand(Vec2{test::uniform(rng, -1, 1), test::uniform(rng, -1, 1)});
    const Vec2 p{test::uniform(rng, -3, 3), test::uniform(rng, -3, 3)};
    double best = 1e9;
    for (int sx = 0; sx <= 100; ++sx) {
      for (int sy = 0; sy <= 100; ++sy) {
        const Vec2 q{b.min.x + (b.max.x - b.min.x) * sx / 100.0, b.min.y + (b.max.y - b.min.y) * sy / 100.0};
        best = std::min(best, distance(p, q));
      }
    }
    CHECK(b.distance_to(p) <= best + 1e-12);
    CHECK(b.distance_to(p) >= best - 0.03);
  }
  CHECK(std::isinf(Box2{}.distance_to({0, 0})));
}

TEST_CASE("bearings map to the nearest view center") {
  const auto centers = view_centers_rad();
  CHECK(centers[1] - centers[0] == doctest::Approx(deg_to_rad(60.0)));
  CHECK(bearing_to_view(deg_to_rad(35.0), centers) == 0);
  CHECK(bearing_to_view(deg_to_rad(-20.0), centers) == 5);
  CHECK(bearing_to_view(deg_to_rad(180.0), centers) == 2);  // tie 150/210 → lower index
  CHECK(bearing_to_view(deg_to_rad(0.0), centers) == 0);    // tie 30/330
}

TEST_CASE("polar actions and poses reject bad values") {
  CHECK_THROWS_AS(PolarAction(-0.1, 0.0), ContractViolation);
  CHECK_THROWS_AS(Pose(0, 0, -1.0, 0), ContractViolation);
  CHECK(Pose(0, 0, 0, -kPi / 2).yaw == doctest::Approx(1.5 * kPi));
}
