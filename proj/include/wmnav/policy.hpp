#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmnav/curiosity_map.hpp"
#include "wmnav/geometry.hpp"
#include "wmnav/image.hpp"
#include "wmnav/simulator.hpp"
#include "wmnav/vlm.hpp"

namespace wmnav {

struct SamplingParams {
  int k = 12;                            // exploration bearings per view
  double dtheta_min = deg_to_rad(10.0);  // minimum spacing between kept exploration actions
  double r_max = 3.0;                    // exploration length cap
  double dtheta_dense = deg_to_rad(3.0); // goal-approach bearing spacing
  double r_min = 0.3;                    // shorter exploration actions are discarded
};

struct PolicyConfig {
  CameraModel camera;
  AgentBody body;
  int map_size = 400;
  double resolution = 0.1;
  double floor_eps = 0.08;
  double max_range = 10.0;
  double r_visit = 1.0;
  double d_thres = 1.0;
  SamplingParams sampling;
  /// Observed cells count as explored only within this distance of the observer.
  double explored_observe_radius = 2.0;
  /// Back-project every n-th pixel row and column.
  int projection_stride = 1;
  /// Panorama strips are shrunk by this factor before concatenation.
  int panorama_downscale = 2;
  int parse_retries = 3;
  int max_steps = 40;
  PromptTemplates templates = PromptTemplates::defaults();

  GridSpec grid_for(Vec2 start) const { return GridSpec::centered_on(start, map_size, resolution); }
};

struct ViewCapture {
  Pose pose;
  GridSpec grid;  // grid of the cell sets below
  Observation obs;
  CellSet navigable;
  CellSet obstacle;
  std::vector<Box2> obstacle_extents;  // parallel to `obstacle`
  RgbImage raster;
};

struct Panorama {
  std::array<ViewCapture, kViewCount> views;
  /// The six labeled strips side by side in capture order.
  PromptImage composite;

  PerViewCells navigable() const;
};

/// Renders the six views at pose.yaw + {30°, 90°, ..., 330°} and extracts their
/// navigable and obstacle cells on `grid`.
Panorama capture_panorama(const Scene& scene, const Pose& pose, const PolicyConfig& config, const GridSpec& grid);

struct Memory {
  CuriosityValueMap cvm;
  Cost cost;
};

struct EpisodeState {
  EpisodeState(const GridSpec& grid, const std::string& goal_category)
      : memory{init_map(grid), Cost::initial(goal_category)}, explored(grid) {}

  int step = 0;
  Stage stage = Stage::Exploration;
  Memory memory;
  ExploredMap explored;
  std::vector<Pose> trajectory;
  std::optional<Vec2> estimated_goal;
  /// World heading of the direction chosen at the previous step.
  std::optional<double> previous_direction;
  bool goal_flag_ever = false;
  /// World headings that just failed to move the agent from `blocked_at`.
  std::vector<double> blocked_headings;
  std::optional<Vec2> blocked_at;
};

struct WorldModelResult {
  DirectionScores scores;
  AveragedScores averaged{};
  std::size_t alpha = 0;
  bool fell_back = false;
};

/// Predict → project → min-merge → visited zeroing → average → argmax. Updates
/// state.memory.cvm in place.
WorldModelResult world_model_step(VlmBackend& backend, const Panorama& panorama, EpisodeState& state,
                                  const Pose& pose, const std::string& goal_category, const PolicyConfig& config,
                                  const std::string& legend = "");

/// Queries the planner on the chosen view and stores the result as the new cost.
/// A raised goal flag moves the episode to GoalApproach for good.
Cost plan_step(VlmBackend& backend, const ViewCapture& view, EpisodeState& state, const std::string& goal_category,
               const std::string& explanation, const PolicyConfig& config, const std::string& legend = "",
               bool* fell_back = nullptr);

/// The view has no navigable cells to sample from.
class EmptyNavigable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CandidateSet {
  Stage stage = Stage::Exploration;
  std::vector<PolarAction> actions;  // agent-relative, ordered left to right in the image
  std::vector<Vec2> endpoints;       // world frame
  std::vector<int> markers;          // number drawn next to each action
  /// Goal stage: where the bearing meets an observed obstacle, if it does. This is the
  /// ground point the marker stands for and becomes the estimated goal when chosen.
  std::vector<std::optional<Vec2>> targets;
  /// Set when explored-region filtering removed every action and the longest one was kept.
  bool fallback = false;

  std::size_t size() const { return actions.size(); }
  void push(const PolarAction& action, Vec2 endpoint, std::optional<Vec2> target = std::nullopt);
  /// Appends entry `i` of `other`, renumbering its marker.
  void push_from(const CandidateSet& other, std::size_t i);
  /// Where the marker is drawn: the target when there is one, else the endpoint.
  Vec2 marker_point(std::size_t i) const { return targets[i] ? *targets[i] : endpoints[i]; }
};

/// Dense lookup of observed obstacle cells answering "how close is the nearest one".
/// Each cell remembers the extent of the obstacle points seen in it, so clearances
/// are measured to observed surfaces rather than to whole cell squares.
class ObstacleMap {
 public:
  explicit ObstacleMap(const GridSpec& grid);
  explicit ObstacleMap(const ViewCapture& view);
  explicit ObstacleMap(const Panorama& panorama);

  /// Marks `cells` as obstacles. `extents`, parallel to `cells`, bound what was seen
  /// in each cell; the whole cell square stands in when it is empty.
  void add(const CellSet& cells, std::span<const Box2> extents = {});
  bool is_obstacle(Cell c) const { return grid_.in_bounds(c) && !extents_[grid_.index(c)].empty(); }
  /// Distance from `p` to the nearest obstacle extent, or `horizon` when none is closer.
  double clearance(Vec2 p, double horizon) const;
  const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  std::vector<Box2> extents_;
};

/// Free travel along a world heading over the view's observed cells: the distance to
/// the last navigable sample before an obstacle or an unobserved stretch, capped at
/// `cap`. With `clearance` > 0 a sample is also blocked when it is nearer than that to
/// an obstacle and nearer than the origin is. The floor strip the camera cannot see
/// next to the agent is treated as passable. `hit_distance` receives how far along the
/// march met an obstacle cell, or -1 when it ended for another reason.
double free_range(const ViewCapture& view, const ObstacleMap& obstacles, Vec2 origin, double heading, double cap,
                  double clearance, const PolicyConfig& config, double* hit_distance = nullptr);

/// Exploration proposer: K bearings across the view, length-capped, endpoints in
/// explored cells dropped, thinned to the minimum spacing. Obstacles default to the
/// view's own.
CandidateSet propose_actions(const ViewCapture& view, const Pose& agent, const ExploredMap& explored,
                             const PolicyConfig& config, const ObstacleMap* obstacles = nullptr);

/// Goal proposer: dense bearings, uncapped lengths, no explored filtering, no minimum
/// length. Bearings that cannot move the agent survive only as zero-length actions
/// whose target is already within d_thres.
CandidateSet propose_goal_actions(const ViewCapture& view, const Pose& agent, const PolicyConfig& config,
                                  const ObstacleMap* obstacles = nullptr);

/// Copy of the view with numbered markers at the candidate endpoints.
PromptImage annotate_view(const ViewCapture& view, const CandidateSet& candidates, const PolicyConfig& config);

struct ReasonResult {
  std::size_t index = 0;
  PolarAction action;
  Vec2 endpoint;
  bool fell_back = false;
  bool queried = false;
};

/// Asks the reasoner to pick a marker. Single-candidate sets skip the query. In
/// GoalApproach the chosen target becomes state.estimated_goal (cleared when the
/// bearing meets no obstacle).
ReasonResult reason_step(VlmBackend& backend, const CandidateSet& candidates, const PromptImage& annotated,
                         EpisodeState& state, const std::string& goal_category, const PolicyConfig& config,
                         const std::string& legend = "");

struct StopDecision {
  bool stop = false;
  double distance_to_goal = std::numeric_limits<double>::infinity();
};

/// Fires only in GoalApproach with an estimated goal strictly closer than d_thres.
StopDecision check_stop(const Pose& pose, const std::optional<Vec2>& estimated_goal, Stage stage, double d_thres);

/// Stopped: the agent stopped, but not within d_thres of a goal instance.
enum class FailureReason { Budget, Error, Unreachable, Stopped };
std::string_view to_string(FailureReason reason);
std::optional<FailureReason> failure_reason_from_string(std::string_view s);

struct StepRecord {
  int step = 0;
  Pose pose;  // before the action
  DirectionScores scores;
  AveragedScores averaged{};
  std::size_t alpha = 0;
  std::string subtask;
  bool goal_flag = false;
  Stage stage = Stage::Exploration;
  PolarAction action;
  double moved = 0.0;
  std::size_t candidates = 0;
  bool stop = false;
  std::optional<Vec2> estimated_goal;
  int fallbacks = 0;
};

struct EpisodeResult {
  std::string id;
  std::string goal_category;
  bool success = false;
  bool stopped = false;
  double path_length = 0.0;
  /// Geodesic distance from the start to the nearest point within d_thres of a goal
  /// instance; zero when no instance is reachable.
  double optimal_length = 0.0;
  int steps = 0;
  std::optional<FailureReason> failure_reason;
  std::string error;
  std::vector<Pose> trajectory;
  std::shared_ptr<const CuriosityValueMap> final_map;
  int fallbacks = 0;
};

struct RunOptions {
  /// Per-episode artifact directory (trajectory.jsonl, CVM snapshots); none when empty.
  std::filesystem::path out_dir;
  /// Also write a CVM snapshot every n steps (0: final map only).
  int snapshot_interval = 0;
  std::optional<int> max_steps;
  std::function<void(const StepRecord&, const EpisodeState&)> on_step;
};

EpisodeResult run_episode(const Episode& episode, VlmBackend& backend, const PolicyConfig& config,
                          const RunOptions& options = {});

/// Geodesic length from the start to the goal region, nullopt when unreachable.
std::optional<double> optimal_path_length(const Episode& episode, const AgentBody& body = {}, double d_thres = 1.0,
                                          double resolution = 0.1);

}  // namespace wmnav
