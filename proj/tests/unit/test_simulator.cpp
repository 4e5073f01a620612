#include <doctest.h>

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "../support.hpp"
#include "wmnav/scene_gen.hpp"
#include "wmnav/simulator.hpp"

using namespace wmnav;

TEST_CASE("scene JSON round-trips and names bad fields") {
  const auto scene = test::two_rooms(4.0, 4.0, {{"bed", {1.0, 1.0}, 0.5, 0.6}, {"tv", {6.0, 3.0}, 0.2, 1.0}});
  const auto doc = scene_to_json(*scene);
  const Scene back = scene_from_json(doc);
  CHECK(scene_to_json(back) == doc);
  CHECK(back.categories() == std::vector<std::string>{"bed", "tv"});
  CHECK(back.category_id("tv") == 2);
  CHECK(back.category_id("sofa") == 0);
  CHECK(back.room_containing({6.0, 1.0})->label == "living room");

  auto bad = doc;
  bad["objects"][0]["radius"] = "big";
  try {
    scene_from_json(bad, "s.json");
    FAIL("accepted a string radius");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("s.json") != std::string::npos);
    CHECK(std::string(e.what()).find("radius") != std::string::npos);
  }
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), InvalidInput);
}

TEST_CASE("depth to a wall straight ahead") {
  const auto scene = test::box_scene(6.0, 4.0);
  const CameraModel cam;
  const Pose pose(1.0, 2.0, 0.88, 0.0);
  const Observation obs = render(*scene, pose, cam);
  // Wall at x = 6: the horizon row sees it at 5 m; the pitched optical axis
  // hits the floor at 0.88 / tan(14°) before reaching it.
  const Vec3 axis = cam.pixel_ray(320.0, 240.0);
  const double floor_hit = 0.88 / -axis.z;
  CHECK(floor_hit * axis.x < 5.0);
  bool checked = false;
  for (int v = 0; v < cam.height(); ++v) {
    const Vec3 d = cam.pixel_ray(320, v);
    const double t_wall = 5.0 / d.x;
    const double z = 0.88 + d.z * t_wall;
    if (z > 0.05 && z < 2.4) {
      CHECK(obs.depth.at(320, v) == doctest::Approx(t_wall).epsilon(1e-6));
      checked = true;
    }
  }
  CHECK(checked);
}

TEST_CASE("semantic ids mark objects") {
  const auto scene = test::box_scene(6.0, 4.0, {{"plant", {3.0, 2.0}, 0.3, 0.8}});
  const Observation obs = render(*scene, Pose(1.0, 2.0, 0.88, 0.0), CameraModel());
  int hits = 0;
  for (int v = 0; v < 480; ++v) hits += obs.semantic.at(320, v) == scene->category_id("plant");
  CHECK(hits > 0);
  CHECK(is_goal_visible(*scene, Pose(1.0, 2.0, 0.88, 0.0), CameraModel(), "plant"));
  CHECK_FALSE(is_goal_visible(*scene, Pose(1.0, 2.0, 0.88, kPi), CameraModel(), "plant"));
}

TEST_CASE("actions stop the body at obstacles") {
  const auto scene = test::box_scene(4.0, 4.0, {{"chair", {3.0, 2.0}, 0.3, 0.8}});
  const AgentBody body;
  double moved = 0.0;
  const Pose end = execute_action(*scene, Pose(1.0, 2.0, 0.88, 0.0), PolarAction(5.0, 0.0), body, &moved);
  CHECK(end.x == doctest::Approx(3.0 - 0.3 - 0.18).epsilon(1e-6));
  CHECK(moved == doctest::Approx(end.x - 1.0));
  CHECK(end.yaw == doctest::Approx(0.0));
  const Pose turned = execute_action(*scene, Pose(1.0, 2.0, 0.88, 0.0), PolarAction(1.0, kPi / 2), body, &moved);
  CHECK(turned.y == doctest::Approx(3.0));
  CHECK(turned.yaw == doctest::Approx(kPi / 2));

  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p = test::random_free_point(*scene, rng, body.radius);
    const Pose start(p.x, p.y, 0.88, test::uniform(rng, 0, kTwoPi));
    const Pose e = execute_action(*scene, start, PolarAction(test::uniform(rng, 0, 5), test::uniform(rng, -kPi, kPi)),
                                  body);
    CHECK(obstacle_clearance(*scene, e.position()) >= body.radius - 1e-6);
  }
}

TEST_CASE("geodesic distance detours through the door") {
  const auto scene = test::two_rooms(4.0, 4.0);
  const auto g = geodesic_distance(*scene, {2.0, 0.6}, {6.0, 0.6});
  REQUIRE(g);
  // Straight line is 4 m; the path must pass the 1 m door centered at y = 2.
  const double via_door = 2.0 * std::hypot(2.0, 1.4 - 0.5 + 0.18);
  CHECK(*g > 4.5);
  CHECK(*g < via_door * 1.09 + 0.3);
  const auto back = geodesic_distance(*scene, {6.0, 0.6}, {2.0, 0.6});
  REQUIRE(back);
  CHECK(std::abs(*g - *back) <= 0.2);
  CHECK(*geodesic_distance(*scene, {1.0, 1.0}, {1.0, 1.0}) == 0.0);

  // A wall with no door separates the two halves.
  const Scene closed(Bounds{{0, 0}, {8, 4}}, {{{4, 0}, {4, 4}}}, {}, {});
  CHECK_FALSE(geodesic_distance(closed, {1, 1}, {7, 1}));
}

TEST_CASE("success needs a stop strictly inside the threshold") {
  const auto scene = test::box_scene(6.0, 4.0, {{"tv", {3.0, 2.0}, 0.2, 1.0}});
  const Episode ep = test::make_episode(scene, Pose(1, 1, 0.88, 0), "tv");
  CHECK(judge_success(ep, Pose(3.99, 2.0, 0.88, 0)));
  CHECK_FALSE(judge_success(ep, Pose(4.01, 2.0, 0.88, 0)));
  CHECK_FALSE(judge_success(ep, Pose(4.0, 2.0, 0.88, 0)));
  CHECK_FALSE(judge_success(ep, Pose(3.5, 2.0, 0.88, 0), false));
}

TEST_CASE("generated scenes are deterministic and episodes solvable") {
  CHECK(scene_to_json(generate_scene(42)) == scene_to_json(generate_scene(42)));
  CHECK(scene_to_json(generate_scene(42)) != scene_to_json(generate_scene(43)));
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto scene = std::make_shared<const Scene>(generate_scene(seed));
    CHECK(scene->rooms().size() >= 2);
    CHECK(scene->rooms().size() <= 6);
    const Episode ep = generate_episode(scene, seed);
    CHECK(std::find(kGoalCategories.begin(), kGoalCategories.end(), ep.goal_category) != kGoalCategories.end());
    const NavGrid nav(*scene, AgentBody{});
    DistanceField field(std::make_shared<NavGrid>(nav), cells_near(nav, ep.goal_positions(), 1.0));
    CHECK(field.at(ep.start.position()));
    // The start room holds no goal instance.
    const Room* room = scene->room_containing(ep.start.position());
    REQUIRE(room);
    for (const Vec2& g : ep.goal_positions()) CHECK_FALSE(room->contains(g));
  }
}

TEST_CASE("episode files resolve scenes relative to themselves") {
  test::TempDir tmp;
  const auto eps = write_suite(tmp.path(), 2, 3);
  REQUIRE(eps.size() == 2);
  const Episode back = load_episode(tmp.path() / "episodes" / "ep_01.json");
  CHECK(back.id == "ep_01");
  CHECK(back.goal_category == eps[1].goal_category);
  CHECK(scene_to_json(*back.scene) == scene_to_json(*eps[1].scene));

  std::ofstream(tmp.path() / "bad.json") << R"({"id": "x", "scene": "missing.json"})";
  try {
    load_episode(tmp.path() / "bad.json");
    FAIL("loaded a broken episode");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
  }
}
