#include "wmnav/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>

#include "json_util.hpp"

namespace wmnav {

namespace {

constexpr double kBoundsWallHeight = 100.0;

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b, Vec2* closest = nullptr) {
  const Vec2 e = b - a;
  const double len2 = e.dot(e);
  double t = len2 > 0.0 ? (p - a).dot(e) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + e * t;
  if (closest) *closest = q;
  return distance(p, q);
}

/// Distance along unit `dir` from `origin` to segment a-b, or nullopt.
std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
  const Vec2 e = b - a;
  const double denom = dir.cross(e);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const Vec2 ao = a - origin;
  const double s = ao.cross(e) / denom;
  const double t = ao.cross(dir) / denom;
  if (s < 0.0 || t < 0.0 || t > 1.0) return std::nullopt;
  return s;
}

/// Entry/exit distances of a ray through a circle, or nullopt when it misses.
std::optional<std::pair<double, double>> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius) {
  const Vec2 m = origin - center;
  const double b = m.dot(dir);
  const double c = m.dot(m) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  return std::pair{-b - root, -b + root};
}

bool segments_cross(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const Vec2 r = p2 - p1;
  const Vec2 s = q2 - q1;
  const double denom = r.cross(s);
  if (std::abs(denom) < 1e-15) return false;
  const Vec2 qp = q1 - p1;
  const double t = qp.cross(s) / denom;
  const double u = qp.cross(r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

/// Distance a disk of radius `rho` - centered on the ray - may travel before touching the
/// circle around `center`. Infinite when moving away or missing.
double sweep_circle(Vec2 p, Vec2 d, Vec2 center, double rho) {
  const Vec2 m = p - center;
  const double dist = m.norm();
  if (dist < rho) return m.dot(d) < 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  const double b = m.dot(d);
  if (b >= 0.0) return std::numeric_limits<double>::infinity();
  const double disc = b * b - (m.dot(m) - rho * rho);
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -b - std::sqrt(disc));
}

double sweep_segment(Vec2 p, Vec2 d, const WallSegment& w, double radius) {
  Vec2 q;
  const double dist0 = point_segment_distance(p, w.a, w.b, &q);
  if (dist0 < radius) return (p - q).dot(d) < 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  double best = std::min(sweep_circle(p, d, w.a, radius), sweep_circle(p, d, w.b, radius));
  const Vec2 e = w.b - w.a;
  const double len = e.norm();
  if (len > 0.0) {
    const Vec2 n{-e.y / len, e.x / len};
    for (double sign : {-1.0, 1.0}) {
      const Vec2 off = n * (sign * radius);
      if (auto s = ray_segment(p, d, w.a + off, w.b + off)) best = std::min(best, *s);
    }
  }
  return best;
}

std::vector<WallSegment> with_bounds(const Bounds& b, const std::vector<WallSegment>& walls) {
  std::vector<WallSegment> out = walls;
  const Vec2 c00 = b.min, c11 = b.max, c10{b.max.x, b.min.y}, c01{b.min.x, b.max.y};
  out.push_back({c00, c10, kBoundsWallHeight});
  out.push_back({c10, c11, kBoundsWallHeight});
  out.push_back({c11, c01, kBoundsWallHeight});
  out.push_back({c01, c00, kBoundsWallHeight});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scene

Scene::Scene(Bounds bounds, std::vector<WallSegment> walls, std::vector<SceneObject> objects, std::vector<Room> rooms)
    : bounds_(bounds), walls_(std::move(walls)), objects_(std::move(objects)), rooms_(std::move(rooms)) {
  if (!(bounds_.max.x > bounds_.min.x && bounds_.max.y > bounds_.min.y)) {
    throw InvalidInput("scene bounds are empty");
  }
  constexpr double kSlack = 1e-9;
  auto inside = [&](Vec2 p) {
    return p.x >= bounds_.min.x - kSlack && p.y >= bounds_.min.y - kSlack && p.x <= bounds_.max.x + kSlack &&
           p.y <= bounds_.max.y + kSlack;
  };
  for (std::size_t i = 0; i < walls_.size(); ++i) {
    const auto& w = walls_[i];
    if (!inside(w.a) || !inside(w.b)) throw InvalidInput("wall " + std::to_string(i) + " leaves the scene bounds");
    if (w.a.x != w.b.x && w.a.y != w.b.y) throw InvalidInput("wall " + std::to_string(i) + " is not axis-aligned");
    if (!(w.height > 0.0)) throw InvalidInput("wall " + std::to_string(i) + " has non-positive height");
  }
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& o = objects_[i];
    if (o.category.empty()) throw InvalidInput("object " + std::to_string(i) + " has an empty category");
    if (!(o.radius > 0.0) || !(o.height > 0.0)) {
      throw InvalidInput("object " + std::to_string(i) + " needs positive radius and height");
    }
    if (!inside(o.position)) throw InvalidInput("object " + std::to_string(i) + " lies outside the scene bounds");
    for (const auto& w : walls_) {
      if (point_segment_distance(o.position, w.a, w.b) < o.radius) {
        throw InvalidInput("object " + std::to_string(i) + " (" + o.category + ") intersects a wall");
      }
    }
  }
  std::set<std::string> cats;
  for (const auto& o : objects_) cats.insert(o.category);
  categories_.assign(cats.begin(), cats.end());
  barriers_ = with_bounds(bounds_, walls_);
}

std::uint16_t Scene::category_id(const std::string& category) const {
  auto it = std::lower_bound(categories_.begin(), categories_.end(), category);
  if (it == categories_.end() || *it != category) return 0;
  return std::uint16_t(it - categories_.begin() + 1);
}

std::vector<const SceneObject*> Scene::instances_of(const std::string& category) const {
  std::vector<const SceneObject*> out;
  for (const auto& o : objects_) {
    if (o.category == category) out.push_back(&o);
  }
  return out;
}

const Room* Scene::room_containing(Vec2 p) const {
  for (const auto& r : rooms_) {
    if (r.contains(p)) return &r;
  }
  return nullptr;
}

nlohmann::json scene_to_json(const Scene& scene) {
  using detail::vec2_json;
  nlohmann::json doc;
  doc["schema"] = Scene::kSchemaVersion;
  doc["bounds"] = {{"min", vec2_json(scene.bounds().min)}, {"max", vec2_json(scene.bounds().max)}};
  doc["walls"] = nlohmann::json::array();
  for (const auto& w : scene.walls()) {
    doc["walls"].push_back({{"a", vec2_json(w.a)}, {"b", vec2_json(w.b)}, {"height", w.height}});
  }
  doc["objects"] = nlohmann::json::array();
  for (const auto& o : scene.objects()) {
    doc["objects"].push_back(
        {{"category", o.category}, {"position", vec2_json(o.position)}, {"radius", o.radius}, {"height", o.height}});
  }
  doc["rooms"] = nlohmann::json::array();
  for (const auto& r : scene.rooms()) {
    doc["rooms"].push_back({{"label", r.label}, {"min", vec2_json(r.min)}, {"max", vec2_json(r.max)}});
  }
  return doc;
}

Scene scene_from_json(const nlohmann::json& doc, const std::string& source) {
  using namespace detail;
  const int schema = get<int>(doc, "schema", source);
  if (schema != Scene::kSchemaVersion) {
    fail_field(source, "schema", "unsupported version " + std::to_string(schema));
  }
  const json& b = require(doc, "bounds", source, "");
  Bounds bounds{get_vec2(b, "min", source, "bounds"), get_vec2(b, "max", source, "bounds")};

  auto array_field = [&](const char* key) -> const json& {
    const json& arr = require(doc, key, source, "");
    if (!arr.is_array()) fail_field(source, key, "expected an array");
    return arr;
  };

  std::vector<WallSegment> walls;
  const json& jw = array_field("walls");
  for (std::size_t i = 0; i < jw.size(); ++i) {
    const std::string path = "walls[" + std::to_string(i) + "]";
    walls.push_back({get_vec2(jw[i], "a", source, path), get_vec2(jw[i], "b", source, path),
                     get_or<double>(jw[i], "height", 2.5, source, path)});
  }
  std::vector<SceneObject> objects;
  const json& jo = array_field("objects");
  for (std::size_t i = 0; i < jo.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    objects.push_back({get<std::string>(jo[i], "category", source, path), get_vec2(jo[i], "position", source, path),
                       get<double>(jo[i], "radius", source, path), get<double>(jo[i], "height", source, path)});
  }
  std::vector<Room> rooms;
  const json& jr = array_field("rooms");
  for (std::size_t i = 0; i < jr.size(); ++i) {
    const std::string path = "rooms[" + std::to_string(i) + "]";
    rooms.push_back({get<std::string>(jr[i], "label", source, path), get_vec2(jr[i], "min", source, path),
                     get_vec2(jr[i], "max", source, path)});
  }
  try {
    return Scene(bounds, std::move(walls), std::move(objects), std::move(rooms));
  } catch (const InvalidInput& e) {
    throw InvalidInput(source + ": " + e.what());
  }
}

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput(path.string() + ": cannot open file");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

}  // namespace

Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_json_file(path), path.string()); }

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << scene_to_json(scene).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Episodes

std::vector<Vec2> Episode::goal_positions() const {
  std::vector<Vec2> out;
  if (!scene) return out;
  for (const auto* o : scene->instances_of(goal_category)) out.push_back(o->position);
  return out;
}

nlohmann::json episode_to_json(const Episode& episode, const std::string& scene_ref) {
  return {{"schema", 1},
          {"id", episode.id},
          {"scene", scene_ref},
          {"start", {{"x", episode.start.x}, {"y", episode.start.y}, {"yaw", episode.start.yaw}}},
          {"goal_category", episode.goal_category},
          {"seed", episode.seed},
          {"max_steps", episode.max_steps}};
}

Episode episode_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir, const std::string& source,
                          std::shared_ptr<const Scene> scene) {
  using namespace detail;
  Episode ep;
  ep.id = get_or<std::string>(doc, "id", "", source);
  const auto scene_ref = get<std::string>(doc, "scene", source);
  ep.scene_path = std::filesystem::path(scene_ref).is_absolute() ? std::filesystem::path(scene_ref)
                                                                  : base_dir / scene_ref;
  const json& start = require(doc, "start", source, "");
  const double x = get<double>(start, "x", source, "start");
  const double y = get<double>(start, "y", source, "start");
  const double yaw = get_or<double>(start, "yaw", 0.0, source, "start");
  ep.start = Pose(x, y, 0.0, yaw);
  ep.goal_category = get<std::string>(doc, "goal_category", source);
  if (ep.goal_category.empty()) fail_field(source, "goal_category", "must not be empty");
  ep.seed = get_or<std::uint64_t>(doc, "seed", 0, source);
  ep.max_steps = get_or<int>(doc, "max_steps", 40, source);
  if (ep.max_steps <= 0) fail_field(source, "max_steps", "must be positive");
  ep.scene = scene ? std::move(scene) : std::make_shared<const Scene>(load_scene(ep.scene_path));
  if (!ep.scene->bounds().contains(ep.start.position())) fail_field(source, "start", "outside the scene bounds");
  if (ep.scene->instances_of(ep.goal_category).empty()) {
    fail_field(source, "goal_category", "no '" + ep.goal_category + "' instance in " + ep.scene_path.string());
  }
  if (ep.id.empty()) ep.id = std::filesystem::path(source).stem().string();
  return ep;
}

Episode load_episode(const std::filesystem::path& path) {
  return episode_from_json(read_json_file(path), path.parent_path(), path.string());
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

struct Primitive {
  enum class Kind { Wall, Object } kind;
  std::size_t index;
  double min_dist;  // horizontal distance from the camera to the primitive
};

}  // namespace

Observation render(const Scene& scene, const Pose& pose, const CameraModel& cam, double max_range) {
  if (!scene.bounds().contains(pose.position())) throw ContractViolation("render: pose outside scene bounds");

  const Vec2 eye = pose.position();
  const auto& barriers = scene.barrier_segments();
  const auto& objects = scene.objects();

  std::vector<Primitive> prims;
  for (std::size_t i = 0; i < barriers.size(); ++i) {
    const double d = point_segment_distance(eye, barriers[i].a, barriers[i].b);
    if (d <= max_range) prims.push_back({Primitive::Kind::Wall, i, d});
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const double d = std::max(0.0, distance(eye, objects[i].position) - objects[i].radius);
    // A camera inside a footprint cannot see that object's surface.
    if (distance(eye, objects[i].position) < objects[i].radius) continue;
    if (d <= max_range) prims.push_back({Primitive::Kind::Object, i, d});
  }
  std::sort(prims.begin(), prims.end(), [](const auto& a, const auto& b) { return a.min_dist < b.min_dist; });

  Observation obs{DepthImage(cam.width(), cam.height()), SemanticImage(cam.width(), cam.height())};
  const double cy = std::cos(pose.yaw);
  const double sy = std::sin(pose.yaw);
  const double h = pose.z;

  for (int v = 0; v < cam.height(); ++v) {
    for (int u = 0; u < cam.width(); ++u) {
      const Vec3 ray = cam.pixel_ray(u, v);
      const Vec3 d{ray.x * cy - ray.y * sy, ray.x * sy + ray.y * cy, ray.z};
      const double hn = std::hypot(d.x, d.y);
      if (hn < 1e-12) continue;
      const Vec2 hdir{d.x / hn, d.y / hn};

      double best_t = std::numeric_limits<double>::infinity();
      std::uint16_t best_id = 0;
      if (d.z < 0.0) {
        const double t = -h / d.z;
        if (scene.bounds().contains({eye.x + t * d.x, eye.y + t * d.y})) best_t = t;
      }
      for (const Primitive& p : prims) {
        if (p.min_dist >= best_t * hn) break;
        if (p.kind == Primitive::Kind::Wall) {
          const auto& w = barriers[p.index];
          const auto s = ray_segment(eye, hdir, w.a, w.b);
          if (!s) continue;
          const double t = *s / hn;
          const double z = h + t * d.z;
          if (z >= 0.0 && z <= w.height && t < best_t) {
            best_t = t;
            best_id = 0;
          }
        } else {
          const auto& o = objects[p.index];
          const auto hit = ray_circle(eye, hdir, o.position, o.radius);
          if (!hit || hit->first < 0.0) continue;
          const auto [s_in, s_out] = *hit;
          const double t_in = s_in / hn;
          const double z_in = h + t_in * d.z;
          double t_hit = std::numeric_limits<double>::infinity();
          if (z_in >= 0.0 && z_in <= o.height) {
            t_hit = t_in;
          } else if (z_in > o.height && d.z < 0.0) {
            const double t_top = (o.height - h) / d.z;
            const double s_top = t_top * hn;
            if (s_top >= s_in && s_top <= s_out) t_hit = t_top;
          }
          if (t_hit < best_t) {
            best_t = t_hit;
            best_id = scene.category_id(o.category);
          }
        }
      }
      if (best_t <= max_range) {
        obs.depth.at(u, v) = best_t;
        obs.semantic.at(u, v) = best_id;
      }
    }
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Motion and visibility

Pose execute_action(const Scene& scene, const Pose& pose, const PolarAction& action, const AgentBody& body,
                    double* moved) {
  const double heading = pose.yaw + action.theta;
  const Vec2 dir = Vec2::unit(heading);
  const Vec2 p = pose.position();
  double free = std::numeric_limits<double>::infinity();
  for (const auto& w : scene.barrier_segments()) free = std::min(free, sweep_segment(p, dir, w, body.radius));
  for (const auto& o : scene.objects()) free = std::min(free, sweep_circle(p, dir, o.position, o.radius + body.radius));
  const double travel = std::clamp(std::min(action.r, free - 1e-9), 0.0, action.r);
  if (moved) *moved = travel;
  const Vec2 q = p + dir * travel;
  return Pose(q.x, q.y, pose.z, heading);
}

double obstacle_clearance(const Scene& scene, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& w : scene.barrier_segments()) best = std::min(best, point_segment_distance(p, w.a, w.b));
  for (const auto& o : scene.objects()) best = std::min(best, distance(p, o.position) - o.radius);
  return best;
}

bool line_of_sight_blocked(const Scene& scene, Vec2 a, Vec2 b, const SceneObject* ignore) {
  for (const auto& w : scene.walls()) {
    if (segments_cross(a, b, w.a, w.b)) return true;
  }
  for (const auto& o : scene.objects()) {
    if (&o == ignore) continue;
    if (point_segment_distance(o.position, a, b) < o.radius) return true;
  }
  return false;
}

bool is_goal_visible(const Scene& scene, const Pose& pose, const CameraModel& cam, const std::string& category,
                     double max_range) {
  const Vec2 eye = pose.position();
  for (const SceneObject* o : scene.instances_of(category)) {
    const Vec2 v = o->position - eye;
    if (v.norm() > max_range) continue;
    const double bearing = wrap_pi(std::atan2(v.y, v.x) - pose.yaw);
    if (std::abs(bearing) > cam.hfov() / 2.0 + 1e-12) continue;
    if (line_of_sight_blocked(scene, eye, o->position, o)) continue;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Geodesics

NavGrid::NavGrid(const Scene& scene, const AgentBody& body, double resolution)
    : grid_(1, resolution, scene.bounds().min) {
  const Bounds& b = scene.bounds();
  width_ = std::max(1, int(std::ceil((b.max.x - b.min.x) / resolution - 1e-9)));
  height_ = std::max(1, int(std::ceil((b.max.y - b.min.y) / resolution - 1e-9)));
  grid_ = GridSpec(std::max(width_, height_), resolution, b.min);
  free_.assign(std::size_t(width_) * height_, 0);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Vec2 c = center({x, y});
      free_[index({x, y})] = (b.contains(c) && obstacle_clearance(scene, c) >= body.radius) ? 1 : 0;
    }
  }
}

std::optional<Cell> NavGrid::snap(Vec2 p) const {
  const Cell home = cell_of(p);
  if (is_free(home)) return home;
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      const Cell c{home.x + dx, home.y + dy};
      if (!is_free(c)) continue;
      const double d = distance(center(c), p);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
  }
  return best;
}

namespace {

struct QueueItem {
  double dist;
  std::size_t index;
  bool operator>(const QueueItem& o) const { return dist > o.dist || (dist == o.dist && index > o.index); }
};

constexpr std::array<std::array<int, 2>, 8> kNeighbors = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

/// Dijkstra over the free cells; stops early once `target` is settled.
std::vector<double> dijkstra(const NavGrid& nav, const std::vector<Cell>& sources,
                             std::optional<Cell> target = std::nullopt) {
  const double res = nav.grid().resolution();
  const double diag = std::sqrt(2.0) * res;
  std::vector<double> dist(std::size_t(nav.width()) * nav.height(), std::numeric_limits<double>::infinity());
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> open;
  for (const Cell& s : sources) {
    if (!nav.is_free(s)) continue;
    dist[nav.index(s)] = 0.0;
    open.push({0.0, nav.index(s)});
  }
  while (!open.empty()) {
    const QueueItem top = open.top();
    open.pop();
    if (top.dist > dist[top.index]) continue;
    const Cell c{int(top.index % nav.width()), int(top.index / nav.width())};
    if (target && c == *target) break;
    for (const auto& [dx, dy] : kNeighbors) {
      const Cell n{c.x + dx, c.y + dy};
      if (!nav.is_free(n)) continue;
      const bool diagonal = dx != 0 && dy != 0;
      if (diagonal && (!nav.is_free({c.x + dx, c.y}) || !nav.is_free({c.x, c.y + dy}))) continue;
      const double nd = top.dist + (diagonal ? diag : res);
      if (nd < dist[nav.index(n)]) {
        dist[nav.index(n)] = nd;
        open.push({nd, nav.index(n)});
      }
    }
  }
  return dist;
}

}  // namespace

DistanceField::DistanceField(std::shared_ptr<const NavGrid> nav, const std::vector<Cell>& sources)
    : nav_(std::move(nav)), dist_(dijkstra(*nav_, sources)) {}

std::optional<double> DistanceField::at_cell(Cell c) const {
  if (!nav_->in_bounds(c)) return std::nullopt;
  const double d = dist_[nav_->index(c)];
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

std::optional<double> DistanceField::at(Vec2 p) const {
  const auto c = nav_->snap(p);
  if (!c) return std::nullopt;
  return at_cell(*c);
}

std::vector<Cell> cells_near(const NavGrid& nav, const std::vector<Vec2>& targets, double radius) {
  std::vector<Cell> out;
  for (int y = 0; y < nav.height(); ++y) {
    for (int x = 0; x < nav.width(); ++x) {
      const Cell c{x, y};
      if (!nav.is_free(c)) continue;
      for (const Vec2& t : targets) {
        if (distance(nav.center(c), t) < radius) {
          out.push_back(c);
          break;
        }
      }
    }
  }
  return out;
}

std::optional<double> geodesic_distance(const NavGrid& nav, Vec2 a, Vec2 b) {
  const auto ca = nav.snap(a);
  const auto cb = nav.snap(b);
  if (!ca || !cb) return std::nullopt;
  const auto dist = dijkstra(nav, {*ca}, *cb);
  const double d = dist[nav.index(*cb)];
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

std::optional<double> geodesic_distance(const Scene& scene, Vec2 a, Vec2 b, const AgentBody& body,
                                        double resolution) {
  return geodesic_distance(NavGrid(scene, body, resolution), a, b);
}

bool judge_success(const Episode& episode, const Pose& stop_pose, bool stopped, double d_thres) {
  if (!stopped) return false;
  for (const Vec2& g : episode.goal_positions()) {
    if (distance(stop_pose.position(), g) < d_thres) return true;
  }
  return false;
}

}  // namespace wmnav
