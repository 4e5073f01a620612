#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "wmnav/simulator.hpp"
#include "wmnav/vlm.hpp"

namespace wmnav {

struct OracleConfig {
  CameraModel camera;
  AgentBody body;
  double max_range = 10.0;
  double d_thres = 1.0;
  double resolution = 0.1;
};

/// Deterministic stand-in for a VLM that answers every role from simulator
/// ground truth instead of pixels.
///
/// Predict: a view scores 10 when a goal instance is visible in it, otherwise
/// round(9 * clamp(1 - g / g_max, 0, 1)) where g is the smallest geodesic distance
/// to the goal region over the free cells the view can see and g_max is the scene
/// diameter. Only a view showing the goal reaches 10.
/// Plan: flags the goal when it is visible in the offered view and names the room
/// holding the nearest goal instance.
/// Reason: markers fall into tiers: standing on a goal instance; a move that keeps
/// searching; a move that would stop short of the goal (its target is within
/// d_thres of its endpoint); staying put. Within the best tier it picks the endpoint
/// geodesically closest to the goal region (ties: Euclidean distance to the nearest
/// instance, then lowest number).
class OracleBackend : public VlmBackend {
 public:
  OracleBackend(std::shared_ptr<const Scene> scene, std::string goal_category, OracleConfig config = {});

  std::string complete(const PromptBundle& prompt) override;

  int view_score(const Pose& view_pose) const;
  std::array<int, kViewCount> predict_scores(std::span<const Pose> view_poses) const;
  ParsedPlan plan_for(const Pose& view_pose) const;
  int choose_marker(std::span<const ActionMarker> markers) const;

  /// Geodesic distance from `p` to the goal region (free cells within d_thres of an instance).
  std::optional<double> goal_geodesic(Vec2 p) const { return field_->at(p); }
  double g_max() const { return scene_->bounds().diameter(); }
  /// Free navigation cells the view can see, horizontally, beyond the camera's floor blind zone.
  std::vector<Cell> visible_free_cells(const Pose& view_pose) const;

  static int progress_score(double geodesic, double g_max);

 private:
  std::shared_ptr<const Scene> scene_;
  std::string goal_;
  OracleConfig config_;
  std::shared_ptr<const NavGrid> nav_;
  std::unique_ptr<DistanceField> field_;
};

}  // namespace wmnav
