#pragma once

// Shared fixtures: tiny hand-built scenes, random free poses and temp dirs.

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <unistd.h>

#include "wmnav/geometry.hpp"
#include "wmnav/simulator.hpp"

namespace wmnav::test {

/// A closed w×h room with the given objects.
inline std::shared_ptr<const Scene> box_scene(double w, double h, std::vector<SceneObject> objects = {}) {
  std::vector<WallSegment> walls;
  std::vector<Room> rooms{{"living room", {0.0, 0.0}, {w, h}}};
  return std::make_shared<const Scene>(Bounds{{0.0, 0.0}, {w, h}}, walls, std::move(objects), rooms);
}

/// Two rooms side by side, joined by a 1 m door in the dividing wall at x = w.
inline std::shared_ptr<const Scene> two_rooms(double w, double h, std::vector<SceneObject> objects = {}) {
  const double door_lo = h / 2.0 - 0.5, door_hi = h / 2.0 + 0.5;
  std::vector<WallSegment> walls{{{w, 0.0}, {w, door_lo}}, {{w, door_hi}, {w, h}}};
  std::vector<Room> rooms{{"bedroom", {0.0, 0.0}, {w, h}}, {"living room", {w, 0.0}, {2 * w, h}}};
  return std::make_shared<const Scene>(Bounds{{0.0, 0.0}, {2 * w, h}}, walls, std::move(objects), rooms);
}

inline Episode make_episode(std::shared_ptr<const Scene> scene, Pose start, std::string goal, std::string id = "t") {
  Episode ep;
  ep.id = std::move(id);
  ep.scene = std::move(scene);
  ep.start = start;
  ep.goal_category = std::move(goal);
  return ep;
}

/// Uniform position at least `clearance` from every obstacle.
inline Vec2 random_free_point(const Scene& scene, std::mt19937_64& rng, double clearance) {
  const Bounds& b = scene.bounds();
  std::uniform_real_distribution<double> ux(b.min.x, b.max.x), uy(b.min.y, b.max.y);
  for (int i = 0; i < 100000; ++i) {
    const Vec2 p{ux(rng), uy(rng)};
    if (obstacle_clearance(scene, p) >= clearance) return p;
  }
  throw std::runtime_error("random_free_point: scene has no free space");
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wmnav_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace wmnav::test
