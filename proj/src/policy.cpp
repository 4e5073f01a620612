#include "wmnav/policy.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace wmnav {

namespace {

constexpr Rgb kLabelColor{255, 255, 255};

/// Horizontal distance below which the tilted camera sees no floor.
double blind_distance(const CameraModel& cam, double camera_height) {
  const double lowest = cam.pitch_down() + cam.vfov() / 2.0;
  return lowest < kPi / 2.0 ? camera_height / std::tan(lowest) : 0.0;
}

std::vector<double> bearing_offsets(int count, double spacing) {
  std::vector<double> out(std::size_t(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out[i] = (i - (count - 1) / 2.0) * spacing;
  return out;
}

/// Numbers markers left to right in the image (largest bearing first).
void order_left_to_right(CandidateSet& set, double view_center) {
  auto offset = [&](std::size_t i) { return wrap_pi(set.actions[i].theta - view_center); };
  std::vector<std::size_t> idx(set.actions.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return offset(a) > offset(b); });
  CandidateSet out;
  out.stage = set.stage;
  out.fallback = set.fallback;
  for (std::size_t i : idx) out.push_from(set, i);
  set = std::move(out);
}

std::string format_double(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

PerViewCells Panorama::navigable() const {
  PerViewCells out;
  for (std::size_t i = 0; i < kViewCount; ++i) out[i] = views[i].navigable;
  return out;
}

Panorama capture_panorama(const Scene& scene, const Pose& pose, const PolicyConfig& config, const GridSpec& grid) {
  Panorama pano;
  const auto centers = view_centers_rad();
  const auto labels = view_labels();
  std::vector<RgbImage> strips;
  pano.composite.label = "panorama";
  for (std::size_t i = 0; i < kViewCount; ++i) {
    ViewCapture& v = pano.views[i];
    v.pose = pose.rotated(centers[i]);
    v.grid = grid;
    v.obs = render(scene, v.pose, config.camera, config.max_range);
    const auto points =
        depth_to_world_points(v.obs.depth, config.camera, v.pose, config.max_range, config.projection_stride);
    auto classes = classify_cells(points, grid, config.floor_eps, config.body.height);
    v.navigable = std::move(classes.navigable);
    v.obstacle = std::move(classes.obstacle);
    v.obstacle_extents = std::move(classes.obstacle_extents);
    v.raster = colorize(v.obs, config.camera, v.pose);

    RgbImage strip = config.panorama_downscale > 1 ? downscale(v.raster, config.panorama_downscale) : v.raster;
    draw_text(strip, 6, 6, labels[i], kLabelColor, 3);
    strips.push_back(std::move(strip));
    pano.composite.view_poses.push_back(v.pose);
  }
  pano.composite.raster = hconcat(strips);
  return pano;
}

WorldModelResult world_model_step(VlmBackend& backend, const Panorama& panorama, EpisodeState& state,
                                  const Pose& pose, const std::string& goal_category, const PolicyConfig& config,
                                  const std::string& legend) {
  WorldModelResult out;
  const PromptBundle prompt = build_predict_prompt(panorama.composite, goal_category, config.templates, legend);
  out.scores = DirectionScores(query_prediction(backend, prompt, config.parse_retries, &out.fell_back).scores);

  const PerViewCells cells = panorama.navigable();
  const NavScoreMap nav = project_scores(out.scores, cells, state.memory.cvm.grid());
  CuriosityValueMap updated = merge(state.memory.cvm, nav);
  updated = mark_visited(updated, pose.position(), config.r_visit, state.goal_flag_ever);
  state.memory.cvm = std::move(updated);

  out.averaged = direction_scores_from_map(state.memory.cvm, cells);
  std::optional<double> previous;
  if (state.previous_direction) previous = wrap_two_pi(*state.previous_direction - pose.yaw);
  out.alpha = argmax_direction(out.averaged, previous);
  return out;
}

Cost plan_step(VlmBackend& backend, const ViewCapture& view, EpisodeState& state, const std::string& goal_category,
               const std::string& explanation, const PolicyConfig& config, const std::string& legend,
               bool* fell_back) {
  PromptImage image{"view", view.raster, {view.pose}, {}};
  const PromptBundle prompt =
      build_plan_prompt(image, state.memory.cost, goal_category, explanation, config.templates, legend);
  ParsedPlan plan = query_plan(backend, prompt, state.memory.cost, config.parse_retries, fell_back);
  if (plan.subtask.empty()) plan.subtask = state.memory.cost.prev_subtask;
  state.memory.cost = Cost{plan.subtask, plan.goal_flag};
  if (plan.goal_flag) {
    state.goal_flag_ever = true;
    state.stage = Stage::GoalApproach;
  }
  return state.memory.cost;
}

ObstacleMap::ObstacleMap(const GridSpec& grid) : grid_(grid), extents_(grid.cell_count()) {}

ObstacleMap::ObstacleMap(const ViewCapture& view) : ObstacleMap(view.grid) {
  add(view.obstacle, view.obstacle_extents);
}

ObstacleMap::ObstacleMap(const Panorama& panorama) : ObstacleMap(panorama.views[0].grid) {
  for (const ViewCapture& v : panorama.views) add(v.obstacle, v.obstacle_extents);
}

void ObstacleMap::add(const CellSet& cells, std::span<const Box2> extents) {
  if (!extents.empty() && extents.size() != cells.size()) {
    throw ContractViolation("ObstacleMap::add: extents must parallel cells");
  }
  const double half = grid_.resolution() / 2.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!grid_.in_bounds(cells[i])) continue;
    Box2 box;
    if (extents.empty()) {
      const Vec2 c = grid_.cell_to_world_center(cells[i]);
      box.expand(Vec2{c.x - half, c.y - half});
      box.expand(Vec2{c.x + half, c.y + half});
    } else {
      box = extents[i];
    }
    extents_[grid_.index(cells[i])].expand(box);
  }
}

double ObstacleMap::clearance(Vec2 p, double horizon) const {
  const Cell center = grid_.world_to_cell(p);
  const int reach = int(std::ceil(horizon / grid_.resolution())) + 1;
  double best = horizon;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const Cell c{center.x + dx, center.y + dy};
      if (is_obstacle(c)) best = std::min(best, extents_[grid_.index(c)].distance_to(p));
    }
  }
  return best;
}

void CandidateSet::push(const PolarAction& action, Vec2 endpoint, std::optional<Vec2> target) {
  actions.push_back(action);
  endpoints.push_back(endpoint);
  targets.push_back(target);
  markers.push_back(int(markers.size()));
}

void CandidateSet::push_from(const CandidateSet& other, std::size_t i) {
  push(other.actions[i], other.endpoints[i], other.targets[i]);
}

double free_range(const ViewCapture& view, const ObstacleMap& obstacles, Vec2 origin, double heading, double cap,
                  double clearance, const PolicyConfig& config, double* hit_distance) {
  const GridSpec& grid = view.grid;
  const double step = config.resolution / 2.0;
  const double blind = blind_distance(config.camera, view.pose.z) + config.resolution;
  // Floor rows thin out with distance; allow gaps of a couple of projected rows.
  const double pixel_angle = config.camera.hfov() / config.camera.width() * config.projection_stride;
  const double h = std::max(view.pose.z, 0.1);
  const Vec2 dir = Vec2::unit(heading);
  const double limit = std::min(cap, config.max_range);
  // An agent that is already closer than `clearance` must not get any closer.
  const double floor_clearance = clearance > 0.0 ? obstacles.clearance(origin, clearance) - 1e-9 : 0.0;

  double last_free = -1.0;
  double last_seen = 0.0;
  if (hit_distance) *hit_distance = -1.0;
  for (double s = step; s <= limit + 1e-9; s += step) {
    const Vec2 p = origin + dir * s;
    const Cell c = grid.world_to_cell(p);
    if (!grid.in_bounds(c)) break;
    if (obstacles.is_obstacle(c)) {
      if (hit_distance) *hit_distance = s;
      break;
    }
    if (clearance > 0.0) {
      const double clr = obstacles.clearance(p, clearance);
      if (clr < floor_clearance) break;
    }
    if (std::binary_search(view.navigable.begin(), view.navigable.end(), c)) {
      last_free = s;
      last_seen = s;
      continue;
    }
    if (s < blind) {
      last_free = s;
      continue;
    }
    const double tolerance = std::max(0.3, 2.0 * s * s * pixel_angle / h + config.resolution);
    if (s - std::max(last_seen, blind) > tolerance) break;
  }
  return last_free < 0.0 ? 0.0 : std::min(last_free, cap);
}

namespace {

/// Pulls an endpoint back along its bearing until it sits on a navigable cell of the view.
std::optional<double> back_off_to_navigable(const ViewCapture& view, Vec2 origin, Vec2 dir, double r, double r_min,
                                            double step) {
  for (double s = r; s >= r_min - 1e-9; s -= step) {
    const Cell c = view.grid.world_to_cell(origin + dir * s);
    if (std::binary_search(view.navigable.begin(), view.navigable.end(), c)) return s;
  }
  return std::nullopt;
}

}  // namespace

CandidateSet propose_actions(const ViewCapture& view, const Pose& agent, const ExploredMap& explored,
                             const PolicyConfig& config, const ObstacleMap* obstacles) {
  if (view.navigable.empty()) throw EmptyNavigable("view has no navigable cells");
  const ObstacleMap own = obstacles ? ObstacleMap(view.grid) : ObstacleMap(view);
  const ObstacleMap& obs = obstacles ? *obstacles : own;
  const SamplingParams& sp = config.sampling;
  const double center = wrap_pi(view.pose.yaw - agent.yaw);
  const Vec2 origin = agent.position();

  struct Sample {
    PolarAction action;
    Vec2 endpoint;
  };
  std::vector<Sample> initial;
  for (double off : bearing_offsets(sp.k, config.camera.hfov() / sp.k)) {
    const double theta = center + off;
    const Vec2 dir = Vec2::unit(agent.yaw + theta);
    const double r = free_range(view, obs, origin, agent.yaw + theta, sp.r_max, config.body.radius, config);
    const auto kept = back_off_to_navigable(view, origin, dir, r, sp.r_min, config.resolution / 2.0);
    if (!kept) continue;
    initial.push_back({PolarAction(*kept, theta), origin + dir * *kept});
  }
  if (initial.empty()) throw EmptyNavigable("no bearing of the view reaches the minimum action length");

  CandidateSet out;
  out.stage = Stage::Exploration;
  std::vector<Sample> survivors;
  for (const Sample& s : initial) {
    if (!explored.is_explored(s.endpoint)) survivors.push_back(s);
  }
  if (survivors.empty()) {
    out.fallback = true;
    survivors.push_back(*std::max_element(initial.begin(), initial.end(), [](const Sample& a, const Sample& b) {
      return a.action.r < b.action.r;
    }));
  }

  // Longest first; keep an action only if it clears every kept bearing by dtheta_min.
  std::stable_sort(survivors.begin(), survivors.end(),
                   [](const Sample& a, const Sample& b) { return a.action.r > b.action.r; });
  for (const Sample& s : survivors) {
    const bool spaced = std::all_of(out.actions.begin(), out.actions.end(), [&](const PolarAction& k) {
      return angular_distance(k.theta, s.action.theta) >= sp.dtheta_min - 1e-12;
    });
    if (!spaced) continue;
    out.push(s.action, s.endpoint);
  }
  order_left_to_right(out, center);
  return out;
}

CandidateSet propose_goal_actions(const ViewCapture& view, const Pose& agent, const PolicyConfig& config,
                                  const ObstacleMap* obstacles) {
  if (view.navigable.empty()) throw EmptyNavigable("view has no navigable cells");
  const ObstacleMap own = obstacles ? ObstacleMap(view.grid) : ObstacleMap(view);
  const ObstacleMap& obs = obstacles ? *obstacles : own;
  const SamplingParams& sp = config.sampling;
  const double center = wrap_pi(view.pose.yaw - agent.yaw);
  const Vec2 origin = agent.position();
  const int count = std::max(1, int(std::floor(config.camera.hfov() / sp.dtheta_dense + 1e-9)));

  CandidateSet out;
  out.stage = Stage::GoalApproach;
  for (double off : bearing_offsets(count, sp.dtheta_dense)) {
    const double theta = center + off;
    const double heading = agent.yaw + theta;
    const Vec2 dir = Vec2::unit(heading);
    double hit = -1.0;
    free_range(view, obs, origin, heading, config.max_range, 0.0, config, &hit);
    std::optional<Vec2> target;
    if (hit >= 0.0) target = origin + dir * hit;
    double r = free_range(view, obs, origin, heading, config.max_range, config.body.radius, config);
    // Final approaches may be short, so r_min does not apply here.
    if (r < config.resolution) {
      // Cannot move this way; only useful as "the goal is right here".
      if (!target || distance(origin, *target) >= config.d_thres) continue;
      r = 0.0;
    }
    out.push(PolarAction(r, theta), origin + dir * r, target);
  }
  if (out.size() == 0) throw EmptyNavigable("every bearing of the view is blocked");
  order_left_to_right(out, center);
  return out;
}

PromptImage annotate_view(const ViewCapture& view, const CandidateSet& candidates, const PolicyConfig& config) {
  const CameraModel& cam = config.camera;
  PromptImage img{"annotated view", view.raster, {view.pose}, {}};
  const double c = std::cos(view.pose.yaw), s = std::sin(view.pose.yaw);
  const int base_x = cam.width() / 2, base_y = cam.height() - 1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Vec2 d = candidates.marker_point(i) - view.pose.position();
    const Vec3 body{d.x * c + d.y * s, -d.x * s + d.y * c, -view.pose.z};
    std::array<double, 2> px;
    const auto projected = cam.project(body);
    if (projected && (*projected)[1] <= cam.height() - 12) {
      px = *projected;
    } else {
      // Endpoints in the strip below the image are pinned to its bottom edge.
      const double rel = std::atan2(body.y, std::max(body.x, 1e-6));
      px = {cam.width() / 2.0 - cam.focal() * std::tan(std::clamp(rel, -1.4, 1.4)), cam.height() - 12.0};
    }
    px[0] = std::clamp(px[0], 12.0, cam.width() - 13.0);
    px[1] = std::clamp(px[1], 12.0, cam.height() - 12.0);
    draw_line(img.raster, base_x, base_y, int(std::lround(px[0])), int(std::lround(px[1])), {255, 255, 255});
    img.markers.push_back(
        {candidates.markers[i], candidates.actions[i], candidates.endpoints[i], candidates.targets[i], px});
  }
  for (const auto& m : img.markers) draw_marker(img.raster, int(std::lround(m.pixel[0])), int(std::lround(m.pixel[1])), m.number);
  return img;
}

ReasonResult reason_step(VlmBackend& backend, const CandidateSet& candidates, const PromptImage& annotated,
                         EpisodeState& state, const std::string& goal_category, const PolicyConfig& config,
                         const std::string& legend) {
  if (candidates.size() == 0) throw ContractViolation("reason_step: empty candidate set");
  ReasonResult out;
  if (candidates.size() > 1) {
    const PromptBundle prompt = build_reason_prompt(annotated, state.memory.cost.prev_subtask, state.memory.cost,
                                                    state.stage, goal_category, config.templates, legend);
    const int count = int(candidates.size());
    out.index = std::size_t(query_action(backend, prompt, count, config.parse_retries, &out.fell_back).index);
    out.queried = true;
  }
  if (out.index >= candidates.size()) throw ContractViolation("reason_step: chosen index out of range");
  out.action = candidates.actions[out.index];
  out.endpoint = candidates.endpoints[out.index];
  if (state.stage == Stage::GoalApproach) state.estimated_goal = candidates.targets[out.index];
  return out;
}

StopDecision check_stop(const Pose& pose, const std::optional<Vec2>& estimated_goal, Stage stage, double d_thres) {
  StopDecision out;
  if (stage != Stage::GoalApproach || !estimated_goal) return out;
  out.distance_to_goal = distance(pose.position(), *estimated_goal);
  out.stop = out.distance_to_goal < d_thres;
  return out;
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::Budget: return "budget";
    case FailureReason::Error: return "error";
    case FailureReason::Unreachable: return "unreachable";
    case FailureReason::Stopped: return "stopped";
  }
  return "error";
}

std::optional<FailureReason> failure_reason_from_string(std::string_view s) {
  for (auto r : {FailureReason::Budget, FailureReason::Error, FailureReason::Unreachable, FailureReason::Stopped}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::optional<double> optimal_path_length(const Episode& episode, const AgentBody& body, double d_thres,
                                          double resolution) {
  auto nav = std::make_shared<const NavGrid>(*episode.scene, body, resolution);
  DistanceField field(nav, cells_near(*nav, episode.goal_positions(), d_thres));
  return field.at(episode.start.position());
}

namespace {

nlohmann::json step_json(const StepRecord& r) {
  nlohmann::json j{{"step", r.step},
                   {"pose", {{"x", r.pose.x}, {"y", r.pose.y}, {"yaw", r.pose.yaw}}},
                   {"scores", r.scores.values()},
                   {"avg_scores", r.averaged},
                   {"alpha", r.alpha},
                   {"subtask", r.subtask},
                   {"goal_flag", r.goal_flag},
                   {"stage", to_string(r.stage)},
                   {"action", {{"r", r.action.r}, {"theta", r.action.theta}}},
                   {"moved", r.moved},
                   {"candidates", r.candidates},
                   {"fallbacks", r.fallbacks},
                   {"stop", r.stop}};
  j["estimated_goal"] = r.estimated_goal ? nlohmann::json{r.estimated_goal->x, r.estimated_goal->y} : nlohmann::json();
  return j;
}

/// Removes candidates heading where the agent just failed to move. An emptied set
/// counts as a view with nothing to offer.
void drop_blocked(CandidateSet& set, const Pose& pose, const EpisodeState& state, double tolerance) {
  if (state.blocked_headings.empty()) return;
  CandidateSet kept;
  kept.stage = set.stage;
  kept.fallback = set.fallback;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double heading = pose.yaw + set.actions[i].theta;
    const bool blocked = std::any_of(state.blocked_headings.begin(), state.blocked_headings.end(),
                                     [&](double b) { return angular_distance(b, heading) < tolerance; });
    if (blocked) continue;
    kept.push_from(set, i);
  }
  if (kept.size() == 0) throw EmptyNavigable("every candidate heads where the agent is blocked");
  set = std::move(kept);
}

/// Directions in decreasing average score, ties to the lower index, `first` leading.
std::vector<std::size_t> direction_order(const AveragedScores& avg, std::size_t first) {
  std::vector<std::size_t> order(kViewCount);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return avg[a] > avg[b]; });
  std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return i == first; });
  return order;
}

}  // namespace

EpisodeResult run_episode(const Episode& episode, VlmBackend& backend, const PolicyConfig& config,
                          const RunOptions& options) {
  if (!episode.scene) throw ContractViolation("run_episode: episode has no scene");
  const Scene& scene = *episode.scene;
  const int max_steps = options.max_steps.value_or(std::min(config.max_steps, episode.max_steps));
  const std::string& goal = episode.goal_category;
  const std::string legend = color_legend(scene);

  EpisodeResult result;
  result.id = episode.id;
  result.goal_category = goal;
  const auto optimal = optimal_path_length(episode, config.body, config.d_thres, config.resolution);
  result.optimal_length = optimal.value_or(0.0);

  Pose pose(episode.start.x, episode.start.y, config.body.camera_height, episode.start.yaw);
  const GridSpec grid = config.grid_for(pose.position());
  EpisodeState state(grid, goal);
  state.trajectory.push_back(pose);

  std::unique_ptr<std::ofstream> log;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log = std::make_unique<std::ofstream>(options.out_dir / "trajectory.jsonl");
  }
  const auto centers = view_centers_rad();
  const auto labels = view_labels();

  try {
    while (state.step < max_steps) {
      StepRecord rec;
      rec.step = state.step;
      rec.pose = pose;

      state.explored.mark_visited(pose.position(), config.r_visit);
      const Panorama pano = capture_panorama(scene, pose, config, grid);
      const WorldModelResult wm = world_model_step(backend, pano, state, pose, goal, config, legend);
      rec.scores = wm.scores;
      rec.averaged = wm.averaged;
      rec.alpha = wm.alpha;
      rec.fallbacks += wm.fell_back;

      const std::string explanation = "View " + labels[wm.alpha] + " has the highest average curiosity value (" +
                                      format_double(wm.averaged[wm.alpha], 2) + " of 10).";
      bool plan_fell_back = false;
      plan_step(backend, pano.views[wm.alpha], state, goal, explanation, config, legend, &plan_fell_back);
      rec.fallbacks += plan_fell_back;
      rec.subtask = state.memory.cost.prev_subtask;
      rec.goal_flag = state.memory.cost.goal_flag;
      rec.stage = state.stage;

      // Propose on the chosen view; fall through to the next-best views when it offers nothing.
      const ObstacleMap obstacles(pano);
      if (state.blocked_at && distance(*state.blocked_at, pose.position()) > 0.05) {
        state.blocked_headings.clear();
        state.blocked_at.reset();
      }
      // A view offering only zero-length actions is kept as a last resort.
      std::optional<CandidateSet> candidates, stay_only;
      std::size_t used = wm.alpha, stay_view = wm.alpha;
      for (std::size_t dir : direction_order(wm.averaged, wm.alpha)) {
        try {
          // Goal proposals only on the chosen view, and only while the planner sees the
          // goal there. Everything else gets plain moves, which carry no target and
          // so cannot end the episode.
          CandidateSet set = state.stage == Stage::GoalApproach && dir == wm.alpha && state.memory.cost.goal_flag
                                 ? propose_goal_actions(pano.views[dir], pose, config, &obstacles)
                                 : propose_actions(pano.views[dir], pose, state.explored, config, &obstacles);
          drop_blocked(set, pose, state, config.sampling.dtheta_min / 2.0);
          const bool moves = std::any_of(set.actions.begin(), set.actions.end(),
                                         [](const PolarAction& a) { return a.r > 0.0; });
          if (moves) {
            candidates = std::move(set);
            used = dir;
            break;
          }
          if (!stay_only) {
            stay_only = std::move(set);
            stay_view = dir;
          }
        } catch (const EmptyNavigable&) {
        }
      }
      if (!candidates && stay_only) {
        candidates = std::move(stay_only);
        used = stay_view;
      }

      Pose next = pose;
      PolarAction action(0.0, centers[wm.alpha]);
      if (candidates) {
        const PromptImage annotated = annotate_view(pano.views[used], *candidates, config);
        const ReasonResult chosen = reason_step(backend, *candidates, annotated, state, goal, config, legend);
        rec.fallbacks += chosen.fell_back;
        rec.candidates = candidates->size();
        action = chosen.action;
      } else {
        // Nothing navigable anywhere: turn toward the chosen direction in place.
        rec.fallbacks += 1;
      }
      state.previous_direction = wrap_two_pi(pose.yaw + centers[used]);

      double moved = 0.0;
      next = execute_action(scene, pose, action, config.body, &moved);
      if (action.r > 0.0 && moved < 0.1 * action.r) {
        state.blocked_at = pose.position();
        state.blocked_headings.push_back(pose.yaw + action.theta);
      }
      for (const ViewCapture& v : pano.views) {
        state.explored.mark_observed(v.navigable, pose.position(), config.explored_observe_radius);
      }
      result.path_length += moved;
      pose = next;
      state.trajectory.push_back(pose);
      ++state.step;

      const StopDecision stop = check_stop(pose, state.estimated_goal, state.stage, config.d_thres);
      rec.action = action;
      rec.moved = moved;
      rec.stop = stop.stop;
      rec.estimated_goal = state.estimated_goal;
      result.fallbacks += rec.fallbacks;
      if (log) *log << step_json(rec).dump() << '\n';
      if (!options.out_dir.empty() && options.snapshot_interval > 0 && state.step % options.snapshot_interval == 0) {
        write_pgm(state.memory.cvm, options.out_dir / cvm_snapshot_name(state.step));
      }
      if (options.on_step) options.on_step(rec, state);
      if (stop.stop) {
        result.stopped = true;
        break;
      }
    }
  } catch (const std::exception& e) {
    result.failure_reason = FailureReason::Error;
    result.error = e.what();
  }

  result.steps = state.step;
  result.trajectory = state.trajectory;
  result.final_map = std::make_shared<const CuriosityValueMap>(state.memory.cvm);
  result.success = result.stopped && judge_success(episode, pose, true, config.d_thres);
  if (!result.success && !result.failure_reason) {
    if (!optimal) result.failure_reason = FailureReason::Unreachable;
    else if (result.stopped) result.failure_reason = FailureReason::Stopped;
    else result.failure_reason = FailureReason::Budget;
  }
  if (!options.out_dir.empty()) {
    write_pgm(state.memory.cvm, options.out_dir / cvm_snapshot_name(state.step));
  }
  return result;
}

}  // namespace wmnav
