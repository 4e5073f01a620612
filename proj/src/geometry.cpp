#include "wmnav/geometry.hpp"

#include <algorithm>

namespace wmnav {

double wrap_two_pi(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod can return exactly 2π after the correction above for tiny negatives.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

double wrap_pi(double angle) {
  double a = wrap_two_pi(angle);
  return a > kPi ? a - kTwoPi : a;
}

double angular_distance(double a, double b) { return std::abs(wrap_pi(a - b)); }

Pose::Pose(double x_, double y_, double z_, double yaw_) : x(x_), y(y_), z(z_), yaw(wrap_two_pi(yaw_)) {
  if (!(z_ >= 0.0)) throw ContractViolation("Pose: camera height must be >= 0");
}

PolarAction::PolarAction(double r_, double theta_) : r(r_), theta(wrap_pi(theta_)) {
  if (!(r_ >= 0.0)) throw ContractViolation("PolarAction: r must be >= 0");
}

CameraModel::CameraModel(int width, int height, double hfov, double pitch_down)
    : width_(width), height_(height), hfov_(hfov), pitch_down_(pitch_down) {
  if (width <= 0 || height <= 0) throw ContractViolation("CameraModel: image dimensions must be positive");
  if (!(hfov > 0.0 && hfov < kPi)) throw ContractViolation("CameraModel: hfov must lie in (0, pi)");
  focal_ = (width_ / 2.0) / std::tan(hfov_ / 2.0);
  vfov_ = 2.0 * std::atan(std::tan(hfov_ / 2.0) * height_ / width_);
}

Vec3 CameraModel::pixel_ray(double u, double v) const {
  const double left = -(u - width_ / 2.0) / focal_;
  const double up = -(v - height_ / 2.0) / focal_;
  const double cp = std::cos(pitch_down_);
  const double sp = std::sin(pitch_down_);
  // optical axis (cp, 0, -sp), camera up (sp, 0, cp), camera left (0, 1, 0)
  Vec3 d{cp + up * sp, left, -sp + up * cp};
  const double n = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  return {d.x / n, d.y / n, d.z / n};
}

std::optional<std::array<double, 2>> CameraModel::project(Vec3 p) const {
  const double cp = std::cos(pitch_down_);
  const double sp = std::sin(pitch_down_);
  const double forward = p.x * cp - p.z * sp;
  const double up = p.x * sp + p.z * cp;
  if (forward <= 1e-9) return std::nullopt;
  return std::array<double, 2>{width_ / 2.0 - focal_ * p.y / forward, height_ / 2.0 - focal_ * up / forward};
}

GridSpec::GridSpec(int map_size, double resolution, Vec2 origin)
    : map_size_(map_size), resolution_(resolution), origin_(origin) {
  if (map_size <= 0) throw ContractViolation("GridSpec: map_size must be positive");
  if (!(resolution > 0.0)) throw ContractViolation("GridSpec: resolution must be positive");
}

GridSpec GridSpec::centered_on(Vec2 center, int map_size, double resolution) {
  const double half = map_size * resolution / 2.0;
  return GridSpec(map_size, resolution, {center.x - half, center.y - half});
}

Cell GridSpec::world_to_cell(Vec2 p) const {
  return {int(std::floor((p.x - origin_.x) / resolution_)), int(std::floor((p.y - origin_.y) / resolution_))};
}

Vec2 GridSpec::cell_to_world_center(Cell c) const {
  return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
}

CellMask::CellMask(const GridSpec& grid, const CellSet& cells) : grid_(grid), bits_(grid.cell_count(), 0) {
  for (const Cell& c : cells) {
    if (grid_.in_bounds(c)) bits_[grid_.index(c)] = 1;
  }
}

std::array<double, kViewCount> view_centers_rad() {
  std::array<double, kViewCount> out{};
  for (std::size_t i = 0; i < kViewCount; ++i) out[i] = deg_to_rad(kViewCentersDeg[i]);
  return out;
}

std::vector<Vec3> depth_to_world_points(const DepthImage& depth, const CameraModel& cam, const Pose& pose,
                                        double max_range, int stride) {
  if (depth.width() != cam.width() || depth.height() != cam.height()) {
    throw ContractViolation("depth_to_world_points: depth image dimensions do not match camera");
  }
  if (stride < 1) throw ContractViolation("depth_to_world_points: stride must be >= 1");

  const double cy = std::cos(pose.yaw);
  const double sy = std::sin(pose.yaw);
  std::vector<Vec3> points;
  points.reserve(std::size_t(depth.width() / stride + 1) * (depth.height() / stride + 1));
  for (int v = 0; v < depth.height(); v += stride) {
    for (int u = 0; u < depth.width(); u += stride) {
      const double range = depth.at(u, v);
      if (!DepthImage::is_hit(range) || range > max_range) continue;
      const Vec3 ray = cam.pixel_ray(u, v);
      const double wx = ray.x * cy - ray.y * sy;
      const double wy = ray.x * sy + ray.y * cy;
      points.push_back({pose.x + range * wx, pose.y + range * wy, pose.z + range * ray.z});
    }
  }
  return points;
}

CellClasses classify_cells(std::span<const Vec3> points, const GridSpec& grid, double floor_eps,
                           double clearance_height, double floor_height) {
  constexpr std::uint8_t kFloor = 1;
  constexpr std::uint8_t kObstacle = 2;
  std::vector<std::uint8_t> flags(grid.cell_count(), 0);
  std::vector<std::size_t> touched;
  std::vector<Box2> extents(grid.cell_count());
  for (const Vec3& p : points) {
    const Cell c = grid.world_to_cell(p.xy());
    if (!grid.in_bounds(c)) continue;
    const double h = p.z - floor_height;
    std::uint8_t mark = 0;
    if (std::abs(h) <= floor_eps) {
      mark = kFloor;
    } else if (h > floor_eps && h < clearance_height) {
      mark = kObstacle;
    } else {
      continue;
    }
    const std::size_t idx = grid.index(c);
    if (flags[idx] == 0) touched.push_back(idx);
    flags[idx] |= mark;
    if (mark == kObstacle) extents[idx].expand(p.xy());
  }
  // Row-major index order matches Cell ordering.
  std::sort(touched.begin(), touched.end());

  CellClasses out;
  for (std::size_t idx : touched) {
    if (flags[idx] == kFloor) {
      out.navigable.push_back(grid.cell_at(idx));
      continue;
    }
    out.obstacle.push_back(grid.cell_at(idx));
    out.obstacle_extents.push_back(extents[idx]);
  }
  return out;
}

CellSet navigable_cells(std::span<const Vec3> points, const GridSpec& grid, double floor_eps,
                        double clearance_height, double floor_height) {
  return classify_cells(points, grid, floor_eps, clearance_height, floor_height).navigable;
}

std::size_t bearing_to_view(double bearing, std::span<const double> view_centers) {
  if (view_centers.empty()) throw ContractViolation("bearing_to_view: empty view set");
  constexpr double kTieEps = 1e-9;
  std::size_t best = 0;
  double best_diff = angular_distance(bearing, view_centers[0]);
  for (std::size_t i = 1; i < view_centers.size(); ++i) {
    const double diff = angular_distance(bearing, view_centers[i]);
    if (diff < best_diff - kTieEps) {
      best = i;
      best_diff = diff;
    }
  }
  return best;
}

}  // namespace wmnav
