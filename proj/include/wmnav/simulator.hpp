#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wmnav/geometry.hpp"

namespace wmnav {

/// Malformed scene, episode, suite or config document. The message names the
/// file and the offending field.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bounds {
  Vec2 min;
  Vec2 max;

  bool contains(Vec2 p) const { return p.x >= min.x && p.y >= min.y && p.x <= max.x && p.y <= max.y; }
  double diameter() const { return distance(min, max); }
};

struct WallSegment {
  Vec2 a;
  Vec2 b;
  double height = 2.5;
};

/// Upright cylinder standing on the floor.
struct SceneObject {
  std::string category;
  Vec2 position;
  double radius = 0.3;
  double height = 0.5;
};

struct Room {
  std::string label;
  Vec2 min;
  Vec2 max;

  bool contains(Vec2 p) const { return p.x >= min.x && p.y >= min.y && p.x <= max.x && p.y <= max.y; }
};

/// Immutable 2.5D indoor world: full-height axis-aligned walls, cylindrical
/// objects, labeled rooms.
class Scene {
 public:
  static constexpr int kSchemaVersion = 1;

  Scene() = default;
  Scene(Bounds bounds, std::vector<WallSegment> walls, std::vector<SceneObject> objects, std::vector<Room> rooms);

  const Bounds& bounds() const { return bounds_; }
  const std::vector<WallSegment>& walls() const { return walls_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const std::vector<Room>& rooms() const { return rooms_; }

  /// Sorted distinct object categories; semantic id of categories()[i] is i + 1.
  const std::vector<std::string>& categories() const { return categories_; }
  /// 0 when the category is absent.
  std::uint16_t category_id(const std::string& category) const;
  std::vector<const SceneObject*> instances_of(const std::string& category) const;
  const Room* room_containing(Vec2 p) const;

  /// Walls plus the four bounds edges, used for all collision and visibility queries.
  const std::vector<WallSegment>& barrier_segments() const { return barriers_; }

 private:
  Bounds bounds_;
  std::vector<WallSegment> walls_;
  std::vector<SceneObject> objects_;
  std::vector<Room> rooms_;
  std::vector<std::string> categories_;
  std::vector<WallSegment> barriers_;
};

nlohmann::json scene_to_json(const Scene& scene);
/// `source` names the document in diagnostics.
Scene scene_from_json(const nlohmann::json& doc, const std::string& source = "<scene>");
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

struct AgentBody {
  double radius = 0.18;
  double height = 0.88;
  double camera_height = 0.88;
};

/// Per-pixel category ids; 0 is floor, wall or nothing.
class SemanticImage {
 public:
  SemanticImage() = default;
  SemanticImage(int width, int height) : width_(width), height_(height), data_(std::size_t(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint16_t at(int u, int v) const { return data_[std::size_t(v) * width_ + u]; }
  std::uint16_t& at(int u, int v) { return data_[std::size_t(v) * width_ + u]; }

  friend bool operator==(const SemanticImage&, const SemanticImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint16_t> data_;
};

struct Observation {
  DepthImage depth;
  SemanticImage semantic;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Episode {
  std::string id;
  std::filesystem::path scene_path;
  std::shared_ptr<const Scene> scene;
  Pose start;
  std::string goal_category;
  std::uint64_t seed = 0;
  int max_steps = 40;

  std::vector<Vec2> goal_positions() const;
};

nlohmann::json episode_to_json(const Episode& episode, const std::string& scene_ref);
/// Relative scene paths resolve against `base_dir`. Loads the scene unless `scene` is given.
Episode episode_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                          const std::string& source = "<episode>",
                          std::shared_ptr<const Scene> scene = nullptr);
Episode load_episode(const std::filesystem::path& path);

/// Raycasts the scene from `pose`. Ranges beyond `max_range` are reported as no-hit.
Observation render(const Scene& scene, const Pose& pose, const CameraModel& cam, double max_range = 10.0);

/// Turns to pose.yaw + theta, then translates min(r, free distance) where the free
/// distance is how far the body disk can sweep before touching an obstacle.
/// `moved` receives the translation actually performed.
Pose execute_action(const Scene& scene, const Pose& pose, const PolarAction& action, const AgentBody& body,
                    double* moved = nullptr);

/// Distance from a point to the nearest wall, bound or object surface.
double obstacle_clearance(const Scene& scene, Vec2 p);

/// True when the 2D segment a→b crosses a wall or an object other than `ignore`.
bool line_of_sight_blocked(const Scene& scene, Vec2 a, Vec2 b, const SceneObject* ignore = nullptr);

/// A goal instance center inside the horizontal field of view, within `max_range`,
/// with an unobstructed straight segment from the camera.
bool is_goal_visible(const Scene& scene, const Pose& pose, const CameraModel& cam, const std::string& category,
                     double max_range = 10.0);

/// Occupancy over the scene bounds with obstacles inflated by the body radius.
class NavGrid {
 public:
  NavGrid(const Scene& scene, const AgentBody& body, double resolution = 0.1);

  const GridSpec& grid() const { return grid_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool is_free(Cell c) const { return in_bounds(c) && free_[index(c)] != 0; }
  std::size_t index(Cell c) const { return std::size_t(c.y) * width_ + c.x; }
  Cell cell_of(Vec2 p) const { return grid_.world_to_cell(p); }
  Vec2 center(Cell c) const { return grid_.cell_to_world_center(c); }
  /// The cell containing `p` if free, else the nearest free cell within two cells.
  std::optional<Cell> snap(Vec2 p) const;

 private:
  GridSpec grid_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> free_;
};

/// Multi-source shortest-path distances over a NavGrid (8-connected, diagonal
/// steps cost √2·resolution, no corner cutting).
class DistanceField {
 public:
  DistanceField(std::shared_ptr<const NavGrid> nav, const std::vector<Cell>& sources);

  std::optional<double> at_cell(Cell c) const;
  /// Distance at the snapped cell of `p`.
  std::optional<double> at(Vec2 p) const;
  const NavGrid& nav() const { return *nav_; }

 private:
  std::shared_ptr<const NavGrid> nav_;
  std::vector<double> dist_;
};

/// Free cells whose centers lie strictly within `radius` of any of `targets`.
std::vector<Cell> cells_near(const NavGrid& nav, const std::vector<Vec2>& targets, double radius);

/// Shortest obstacle-avoiding path length between two points; nullopt when unreachable.
std::optional<double> geodesic_distance(const Scene& scene, Vec2 a, Vec2 b, const AgentBody& body = {},
                                        double resolution = 0.1);
std::optional<double> geodesic_distance(const NavGrid& nav, Vec2 a, Vec2 b);

/// Success iff the agent stopped strictly within `d_thres` of a goal instance.
bool judge_success(const Episode& episode, const Pose& stop_pose, bool stopped = true, double d_thres = 1.0);

}  // namespace wmnav
