#include "wmnav/oracle_backend.hpp"

#include <algorithm>
#include <tuple>

namespace wmnav {

namespace {

/// Horizontal distance to the first wall or object along a ray.
double first_hit(const Scene& scene, Vec2 origin, Vec2 dir, double max_range) {
  double best = max_range;
  for (const auto& w : scene.barrier_segments()) {
    const Vec2 e = w.b - w.a;
    const double denom = dir.cross(e);
    if (std::abs(denom) < 1e-15) continue;
    const Vec2 ao = w.a - origin;
    const double s = ao.cross(e) / denom;
    const double t = ao.cross(dir) / denom;
    if (s >= 0.0 && t >= 0.0 && t <= 1.0) best = std::min(best, s);
  }
  for (const auto& o : scene.objects()) {
    const Vec2 m = origin - o.position;
    const double b = m.dot(dir);
    const double disc = b * b - (m.dot(m) - o.radius * o.radius);
    if (disc < 0.0) continue;
    const double s = -b - std::sqrt(disc);
    if (s >= 0.0) best = std::min(best, s);
  }
  return best;
}

}  // namespace

OracleBackend::OracleBackend(std::shared_ptr<const Scene> scene, std::string goal_category, OracleConfig config)
    : scene_(std::move(scene)), goal_(std::move(goal_category)), config_(config) {
  if (!scene_) throw ContractViolation("OracleBackend: null scene");
  nav_ = std::make_shared<const NavGrid>(*scene_, config_.body, config_.resolution);
  std::vector<Vec2> goals;
  for (const auto* o : scene_->instances_of(goal_)) goals.push_back(o->position);
  field_ = std::make_unique<DistanceField>(nav_, cells_near(*nav_, goals, config_.d_thres));
}

int OracleBackend::progress_score(double geodesic, double g_max) {
  return int(std::lround(9.0 * std::clamp(1.0 - geodesic / g_max, 0.0, 1.0)));
}

std::vector<Cell> OracleBackend::visible_free_cells(const Pose& view_pose) const {
  const CameraModel& cam = config_.camera;
  const double res = config_.resolution;
  // Nearest floor the tilted camera can see.
  const double lowest = cam.pitch_down() + cam.vfov() / 2.0;
  const double near = lowest < kPi / 2.0 ? view_pose.z / std::tan(lowest) : 0.0;
  const double step = res / config_.max_range;
  const int rays = int(std::ceil(cam.hfov() / step)) + 1;

  std::vector<std::uint8_t> seen(std::size_t(nav_->width()) * nav_->height(), 0);
  std::vector<Cell> out;
  for (int i = 0; i < rays; ++i) {
    const double bearing = -cam.hfov() / 2.0 + cam.hfov() * i / double(rays - 1);
    const Vec2 dir = Vec2::unit(view_pose.yaw + bearing);
    const double hit = first_hit(*scene_, view_pose.position(), dir, config_.max_range);
    for (double s = near; s < hit; s += res / 2.0) {
      const Cell c = nav_->cell_of(view_pose.position() + dir * s);
      if (!nav_->is_free(c) || seen[nav_->index(c)]) continue;
      seen[nav_->index(c)] = 1;
      out.push_back(c);
    }
  }
  return out;
}

int OracleBackend::view_score(const Pose& view_pose) const {
  if (is_goal_visible(*scene_, view_pose, config_.camera, goal_, config_.max_range)) return 10;
  double best = std::numeric_limits<double>::infinity();
  for (const Cell& c : visible_free_cells(view_pose)) {
    if (auto d = field_->at_cell(c)) best = std::min(best, *d);
  }
  if (!std::isfinite(best)) return 0;
  return progress_score(best, g_max());
}

std::array<int, kViewCount> OracleBackend::predict_scores(std::span<const Pose> view_poses) const {
  if (view_poses.size() != kViewCount) throw ContractViolation("OracleBackend: panorama needs six view poses");
  std::array<int, kViewCount> scores{};
  for (std::size_t i = 0; i < kViewCount; ++i) scores[i] = view_score(view_poses[i]);
  return scores;
}

ParsedPlan OracleBackend::plan_for(const Pose& view_pose) const {
  const bool visible = is_goal_visible(*scene_, view_pose, config_.camera, goal_, config_.max_range);
  const SceneObject* nearest = nullptr;
  std::pair<double, double> nearest_key;
  for (const auto* o : scene_->instances_of(goal_)) {
    const auto g = geodesic_distance(*nav_, view_pose.position(), o->position);
    const std::pair<double, double> key{g ? *g : std::numeric_limits<double>::infinity(),
                                        distance(view_pose.position(), o->position)};
    if (!nearest || key < nearest_key) {
      nearest = o;
      nearest_key = key;
    }
  }
  const Room* room = nearest ? scene_->room_containing(nearest->position) : nullptr;
  const std::string where = room ? "the " + room->label : "the area ahead";
  ParsedPlan plan;
  plan.goal_flag = visible;
  plan.subtask = visible ? "approach the " + goal_ + " in " + where : "head to " + where + " to find the " + goal_;
  plan.explanation = visible ? "the " + goal_ + " is in view" : "the " + goal_ + " is not in view yet";
  return plan;
}

int OracleBackend::choose_marker(std::span<const ActionMarker> markers) const {
  if (markers.empty()) throw ContractViolation("OracleBackend: no markers to choose from");
  const auto goals = scene_->instances_of(goal_);
  auto euclid = [&](Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto* o : goals) best = std::min(best, distance(p, o->position));
    return best;
  };
  auto on_goal = [&](Vec2 p) {
    return std::any_of(goals.begin(), goals.end(), [&](const SceneObject* o) {
      return distance(p, o->position) <= o->radius + 2.0 * config_.resolution;
    });
  };
  std::size_t best = 0;
  std::tuple<int, double, double> best_key{4, 0.0, 0.0};
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const ActionMarker& m = markers[i];
    // Tiers: on the goal, a move that keeps searching, a move that would end the
    // episode short of the goal, staying put.
    int tier = 3;
    if (m.target && on_goal(*m.target)) tier = 0;
    else if (m.action.r > 0.0) tier = m.target && distance(m.endpoint, *m.target) < config_.d_thres ? 2 : 1;
    const auto g = field_->at(m.endpoint);
    const std::tuple<int, double, double> key{tier, g ? *g : std::numeric_limits<double>::infinity(),
                                              euclid(m.endpoint)};
    if (key < best_key) {
      best_key = key;
      best = i;
    }
  }
  return markers[best].number;
}

std::string OracleBackend::complete(const PromptBundle& prompt) {
  if (prompt.images.size() != 1) throw ContractViolation("OracleBackend: expected exactly one image");
  const PromptImage& img = prompt.images.front();
  switch (prompt.role) {
    case VlmRole::Predict: return format_prediction(predict_scores(img.view_poses));
    case VlmRole::Plan:
      if (img.view_poses.size() != 1) throw ContractViolation("OracleBackend: plan image needs one view pose");
      return format_plan(plan_for(img.view_poses.front()));
    case VlmRole::Reason: return format_action(choose_marker(img.markers));
  }
  return {};
}

}  // namespace wmnav
