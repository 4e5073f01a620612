#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmnav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when a caller breaks a documented precondition (mismatched sizes,
/// grids, out-of-range poses).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps to [0, 2π).
double wrap_two_pi(double angle);
/// Wraps to (−π, π].
double wrap_pi(double angle);
/// Smallest absolute difference between two headings, in [0, π].
double angular_distance(double a, double b);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  static Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec2 xy() const { return {x, y}; }
};

/// Agent pose: planar position, camera height and heading (CCW from world +x).
/// Construction normalizes yaw into [0, 2π) and rejects negative heights.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  Pose() = default;
  Pose(double x_, double y_, double z_, double yaw_);

  Vec2 position() const { return {x, y}; }
  Vec3 camera() const { return {x, y, z}; }
  /// Same position, heading rotated by `delta`.
  Pose rotated(double delta) const { return Pose(x, y, z, yaw + delta); }
};

/// Polar movement command in the agent frame: travel `r` meters along bearing
/// `theta` (radians, CCW positive, 0 = straight ahead).
struct PolarAction {
  double r = 0.0;
  double theta = 0.0;

  PolarAction() = default;
  PolarAction(double r_, double theta_);
};

/// Pinhole camera tilted down by `pitch_down`. Square pixels; principal point
/// at (width/2, height/2) so pixel (width/2, height/2) is the optical axis.
class CameraModel {
 public:
  CameraModel() : CameraModel(640, 480, deg_to_rad(79.0), deg_to_rad(14.0)) {}
  CameraModel(int width, int height, double hfov, double pitch_down);

  int width() const { return width_; }
  int height() const { return height_; }
  double hfov() const { return hfov_; }
  double pitch_down() const { return pitch_down_; }
  double vfov() const { return vfov_; }
  double focal() const { return focal_; }

  /// Unit ray for pixel (u, v) in the level body frame: x forward, y left, z up.
  Vec3 pixel_ray(double u, double v) const;
  /// Projects a body-frame point into pixel coordinates; nullopt when the
  /// point is behind the image plane.
  std::optional<std::array<double, 2>> project(Vec3 body_point) const;

  friend bool operator==(const CameraModel&, const CameraModel&) = default;

 private:
  int width_;
  int height_;
  double hfov_;
  double pitch_down_;
  double vfov_;
  double focal_;
};

/// Per-pixel Euclidean range image. Pixels that hit nothing within the sensor
/// range hold `kNoHit`.
class DepthImage {
 public:
  static constexpr double kNoHit = std::numeric_limits<double>::infinity();

  DepthImage() = default;
  DepthImage(int width, int height) : width_(width), height_(height), data_(std::size_t(width) * height, kNoHit) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int u, int v) const { return data_[std::size_t(v) * width_ + u]; }
  double& at(int u, int v) { return data_[std::size_t(v) * width_ + u]; }
  std::span<const double> data() const { return data_; }
  static bool is_hit(double range) { return std::isfinite(range) && range > 0.0; }

  friend bool operator==(const DepthImage&, const DepthImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(Cell, Cell) = default;
  friend auto operator<=>(Cell a, Cell b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

/// Sorted, duplicate-free list of cells.
using CellSet = std::vector<Cell>;

/// Square top-down grid. Cell (0,0) covers [origin.x, origin.x+res) × [origin.y, origin.y+res).
class GridSpec {
 public:
  GridSpec() : GridSpec(400, 0.1, {-20.0, -20.0}) {}
  GridSpec(int map_size, double resolution, Vec2 origin);

  /// Default-sized grid whose center sits on `center`.
  static GridSpec centered_on(Vec2 center, int map_size = 400, double resolution = 0.1);

  int map_size() const { return map_size_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  std::size_t cell_count() const { return std::size_t(map_size_) * map_size_; }

  Cell world_to_cell(Vec2 p) const;
  Vec2 cell_to_world_center(Cell c) const;
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < map_size_ && c.y < map_size_; }
  bool contains(Vec2 p) const { return in_bounds(world_to_cell(p)); }
  std::size_t index(Cell c) const { return std::size_t(c.y) * map_size_ + c.x; }
  Cell cell_at(std::size_t index) const { return {int(index % map_size_), int(index / map_size_)}; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int map_size_;
  double resolution_;
  Vec2 origin_;
};

/// Dense membership mask over a grid, built from a CellSet for O(1) lookups.
class CellMask {
 public:
  CellMask(const GridSpec& grid, const CellSet& cells);
  bool contains(Cell c) const { return grid_.in_bounds(c) && bits_[grid_.index(c)] != 0; }
  bool contains(Vec2 p) const { return contains(grid_.world_to_cell(p)); }

 private:
  GridSpec grid_;
  std::vector<std::uint8_t> bits_;
};

/// View centers of the panoramic capture, agent-relative, in capture order.
inline constexpr std::array<double, 6> kViewCentersDeg = {30.0, 90.0, 150.0, 210.0, 270.0, 330.0};
inline constexpr std::size_t kViewCount = kViewCentersDeg.size();

std::array<double, kViewCount> view_centers_rad();

/// Back-projects every valid pixel (optionally every `stride`-th row and column)
/// to a world point. Ranges beyond `max_range` are dropped.
std::vector<Vec3> depth_to_world_points(const DepthImage& depth, const CameraModel& cam, const Pose& pose,
                                        double max_range = 10.0, int stride = 1);

/// Cells holding at least one floor point and no obstacle point below the
/// clearance height.
CellSet navigable_cells(std::span<const Vec3> points, const GridSpec& grid, double floor_eps = 0.08,
                        double clearance_height = 0.88, double floor_height = 0.0);

/// Axis-aligned planar box; default-constructed empty.
struct Box2 {
  Vec2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  bool empty() const { return min.x > max.x; }
  void expand(Vec2 p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y)};
  }
  void expand(const Box2& b) {
    if (b.empty()) return;
    expand(b.min);
    expand(b.max);
  }
  /// Zero inside; infinite for an empty box.
  double distance_to(Vec2 p) const {
    if (empty()) return std::numeric_limits<double>::infinity();
    return std::hypot(std::max({min.x - p.x, 0.0, p.x - max.x}), std::max({min.y - p.y, 0.0, p.y - max.y}));
  }
};

struct CellClasses {
  CellSet navigable;
  /// Cells holding at least one point between the floor band and the clearance height.
  CellSet obstacle;
  /// Parallel to `obstacle`: planar extent of those points within the cell.
  std::vector<Box2> obstacle_extents;
};

/// navigable_cells plus the obstacle cells, from one pass over the points.
CellClasses classify_cells(std::span<const Vec3> points, const GridSpec& grid, double floor_eps = 0.08,
                           double clearance_height = 0.88, double floor_height = 0.0);

/// Index of the view center nearest to an agent-relative bearing; ties go to the
/// lower index.
std::size_t bearing_to_view(double bearing, std::span<const double> view_centers);

}  // namespace wmnav
