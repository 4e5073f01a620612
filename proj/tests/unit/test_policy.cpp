#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "wmnav/oracle_backend.hpp"
#include "wmnav/policy.hpp"

using namespace wmnav;

namespace {

class Fixed : public VlmBackend {
 public:
  std::string predict = "30:2 90:9 150:2 210:2 270:2 330:2";
  std::string plan = R"({"subtask": "explore", "goal_flag": false})";
  std::string reason = R"({"action": 0})";
  int reason_calls = 0;
  std::string complete(const PromptBundle& p) override {
    switch (p.role) {
      case VlmRole::Predict: return predict;
      case VlmRole::Plan: return plan;
      case VlmRole::Reason: ++reason_calls; return reason;
    }
    return {};
  }
};

}  // namespace

TEST_CASE("stop fires strictly inside the threshold and only when approaching") {
  const Pose p(0, 0, 0.88, 0);
  CHECK(check_stop(p, Vec2{0.999, 0.0}, Stage::GoalApproach, 1.0).stop);
  CHECK_FALSE(check_stop(p, Vec2{1.0, 0.0}, Stage::GoalApproach, 1.0).stop);
  CHECK_FALSE(check_stop(p, Vec2{0.5, 0.0}, Stage::Exploration, 1.0).stop);
  CHECK_FALSE(check_stop(p, std::nullopt, Stage::GoalApproach, 1.0).stop);
  CHECK(check_stop(p, Vec2{0.6, 0.8}, Stage::GoalApproach, 1.0).distance_to_goal == doctest::Approx(1.0));
}

TEST_CASE("panorama views sit at 60 degree spacing around the heading") {
  const auto scene = test::box_scene(6, 6);
  const PolicyConfig cfg;
  const Pose pose(3, 3, 0.88, 0.4);
  const Panorama pano = capture_panorama(*scene, pose, cfg, cfg.grid_for(pose.position()));
  for (std::size_t i = 0; i < kViewCount; ++i) {
    CHECK(angular_distance(pano.views[i].pose.yaw, 0.4 + deg_to_rad(30.0 + 60.0 * i)) < 1e-9);
    CHECK_FALSE(pano.views[i].navigable.empty());
  }
  CHECK(pano.composite.view_poses.size() == kViewCount);
  CHECK(pano.composite.raster.width() > pano.composite.raster.height());
}

TEST_CASE("obstacle map clearance matches brute force over extents") {
  const GridSpec grid(30, 0.1, {0, 0});
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    CellSet cells;
    std::vector<Box2> boxes;
    for (int i = 0; i < 15; ++i) cells.push_back({int(rng() % 30), int(rng() % 30)});
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (const Cell& c : cells) {
      const Vec2 lo = grid.cell_to_world_center(c) - Vec2{0.05, 0.05};
      Box2 b;
      b.expand(lo + Vec2{test::uniform(rng, 0, 0.1), test::uniform(rng, 0, 0.1)});
      b.expand(lo + Vec2{test::uniform(rng, 0, 0.1), test::uniform(rng, 0, 0.1)});
      boxes.push_back(b);
    }
    ObstacleMap map(grid);
    map.add(cells, boxes);
    for (int q = 0; q < 50; ++q) {
      const Vec2 p{test::uniform(rng, 0, 3), test::uniform(rng, 0, 3)};
      double best = 1.0;
      for (const Box2& b : boxes) best = std::min(best, b.distance_to(p));
      CHECK(map.clearance(p, 1.0) == doctest::Approx(best));
    }
    for (const Cell& c : cells) CHECK(map.is_obstacle(c));
  }
}

TEST_CASE("exploration candidates respect length, spacing and explored cells") {
  const auto scene = test::box_scene(8, 8, {{"chair", {6, 4}, 0.3, 0.8}});
  const PolicyConfig cfg;
  const Pose pose(2, 4, 0.88, 0.0);
  const GridSpec grid = cfg.grid_for(pose.position());
  const Panorama pano = capture_panorama(*scene, pose, cfg, grid);
  ExploredMap explored(grid);
  explored.mark_visited(pose.position(), cfg.r_visit);
  for (const ViewCapture& view : pano.views) {
    const CandidateSet set = propose_actions(view, pose, explored, cfg);
    REQUIRE(set.size() > 0);
    const CellMask nav(view.grid, view.navigable);
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(set.actions[i].r <= cfg.sampling.r_max + 1e-9);
      CHECK(set.actions[i].r >= cfg.sampling.r_min - 1e-9);
      CHECK(set.markers[i] == int(i));
      if (!set.fallback) CHECK_FALSE(explored.is_explored(set.endpoints[i]));
      for (std::size_t j = i + 1; j < set.size(); ++j) {
        CHECK(angular_distance(set.actions[i].theta, set.actions[j].theta) >= cfg.sampling.dtheta_min - 1e-9);
      }
    }
  }
}

TEST_CASE("goal candidates land next to a visible goal") {
  const auto scene = test::box_scene(8, 8, {{"bed", {6, 4}, 0.5, 0.6}});
  const PolicyConfig cfg;
  const Pose pose(2.5, 4, 0.88, -deg_to_rad(30.0));  // view 0 looks along +x
  const Panorama pano = capture_panorama(*scene, pose, cfg, cfg.grid_for(pose.position()));
  REQUIRE(is_goal_visible(*scene, pano.views[0].pose, cfg.camera, "bed"));
  const CandidateSet set = propose_goal_actions(pano.views[0], pose, cfg);
  REQUIRE(set.size() > 0);
  CHECK(set.size() <= 27);
  bool near_goal = false;
  for (std::size_t i = 0; i < set.size(); ++i) near_goal |= distance(set.marker_point(i), {6, 4}) < cfg.d_thres;
  CHECK(near_goal);
}

TEST_CASE("reason step picks the marker and skips the query for one candidate") {
  const auto scene = test::box_scene(6, 6);
  PolicyConfig cfg;
  const Pose pose(3, 3, 0.88, 0);
  const GridSpec grid = cfg.grid_for(pose.position());
  EpisodeState state(grid, "tv");
  CandidateSet set;
  set.push(PolarAction(1.0, 0.2), {4, 3.2});
  set.push(PolarAction(2.0, -0.2), {5, 2.6});
  Fixed vlm;
  vlm.reason = R"({"action": 1})";
  PromptImage img;
  img.view_poses = {pose};
  for (int i = 0; i < 2; ++i) {
    ActionMarker m;
    m.number = i;
    m.action = set.actions[i];
    m.endpoint = set.endpoints[i];
    img.markers.push_back(m);
  }
  auto r = reason_step(vlm, set, img, state, "tv", cfg);
  CHECK(r.index == 1);
  CHECK(r.action.r == 2.0);
  CHECK(vlm.reason_calls == 1);

  CandidateSet one;
  one.push(PolarAction(1.0, 0.0), {4, 3});
  r = reason_step(vlm, one, img, state, "tv", cfg);
  CHECK(r.index == 0);
  CHECK_FALSE(r.queried);
  CHECK(vlm.reason_calls == 1);
}

TEST_CASE("world model step lowers the map and turns toward the best view") {
  const auto scene = test::box_scene(8, 8);
  const PolicyConfig cfg;
  const Pose pose(4, 4, 0.88, 0);
  const GridSpec grid = cfg.grid_for(pose.position());
  EpisodeState state(grid, "tv");
  const Panorama pano = capture_panorama(*scene, pose, cfg, grid);
  Fixed vlm;
  const auto before = state.memory.cvm;
  const WorldModelResult wm = world_model_step(vlm, pano, state, pose, "tv", cfg);
  CHECK(wm.alpha == 1);
  CHECK(wm.scores[1] == 9);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    CHECK(state.memory.cvm.at(grid.cell_at(i)) <= before.at(grid.cell_at(i)));
  }
  CHECK(state.memory.cvm.at(grid.world_to_cell(pose.position())) == 0.0);
}

TEST_CASE("oracle episode through a door succeeds within budget") {
  const auto scene = test::two_rooms(4.0, 4.0, {{"tv", {7.2, 3.2}, 0.25, 1.0}});
  const Episode ep = test::make_episode(scene, Pose(1.0, 1.0, 0.88, 0.0), "tv");
  const PolicyConfig cfg;
  OracleBackend oracle(scene, "tv");
  int steps_seen = 0;
  RunOptions ro;
  ro.on_step = [&](const StepRecord& rec, const EpisodeState&) { CHECK(rec.step == steps_seen++); };
  const EpisodeResult r = run_episode(ep, oracle, cfg, ro);
  CHECK(r.success);
  CHECK(r.stopped);
  CHECK_FALSE(r.failure_reason);
  CHECK(r.steps <= 40);
  CHECK(r.steps == steps_seen);
  CHECK(r.trajectory.size() == std::size_t(r.steps) + 1);
  CHECK(r.path_length >= r.optimal_length * 0.9);
  CHECK(r.optimal_length > 0.0);
}

TEST_CASE("an unreachable goal ends on budget as unreachable") {
  const Scene closed(Bounds{{0, 0}, {8, 4}}, {{{4, 0}, {4, 4}}}, {{"bed", {6, 2}, 0.5, 0.6}},
                     {{"a", {0, 0}, {4, 4}}, {"b", {4, 0}, {8, 4}}});
  const Episode ep = test::make_episode(std::make_shared<const Scene>(closed), Pose(1, 2, 0.88, 0), "bed");
  OracleBackend oracle(ep.scene, "bed");
  RunOptions ro;
  ro.max_steps = 3;
  const EpisodeResult r = run_episode(ep, oracle, PolicyConfig{}, ro);
  CHECK_FALSE(r.success);
  REQUIRE(r.failure_reason);
  CHECK(*r.failure_reason == FailureReason::Unreachable);
  CHECK(r.steps <= 3);
}

TEST_CASE("failure reasons round-trip through their names") {
  for (auto f : {FailureReason::Budget, FailureReason::Error, FailureReason::Unreachable, FailureReason::Stopped}) {
    CHECK(failure_reason_from_string(to_string(f)) == f);
  }
  CHECK_FALSE(failure_reason_from_string("tired"));
}
