#include "wmnav/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace wmnav {

namespace {

struct Furniture {
  const char* category;
  double radius;
  double height;
};

constexpr Furniture kFurniture[] = {
    {"bed", 0.5, 0.6},    {"sofa", 0.45, 0.8},  {"toilet", 0.3, 0.45},  {"tv", 0.35, 1.1},
    {"plant", 0.3, 0.9},  {"chair", 0.3, 0.9},  {"table", 0.45, 0.75},   {"cabinet", 0.4, 1.6},
};

const Furniture& furniture(const std::string& category) {
  for (const auto& f : kFurniture) {
    if (category == f.category) return f;
  }
  throw ContractViolation("scene_gen: unknown category " + category);
}

const char* room_label_for(const std::string& goal) {
  static const std::map<std::string, const char*> labels{{"bed", "bedroom"}, {"sofa", "living room"},
                                                         {"toilet", "bathroom"}, {"tv", "den"},
                                                         {"plant", "sunroom"}, {"chair", "office"}};
  return labels.at(goal);
}

struct FillerRoom {
  const char* label;
  std::vector<std::string> objects;
};

const std::vector<FillerRoom>& filler_rooms() {
  static const std::vector<FillerRoom> rooms{
      {"kitchen", {"table", "cabinet"}}, {"dining room", {"table"}}, {"storage room", {"cabinet"}}, {"hallway", {}}};
  return rooms;
}

struct Door {
  Vec2 center;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double round_to(double v, double step) { return std::round(v / step) * step; }

struct Layout {
  int cols;
  int rows;
  std::vector<int> room_of_cell;  // cols * rows, cell index = cy * cols + cx
  int room_count;
};

Layout make_layout(int n, std::mt19937_64& rng) {
  Layout l;
  switch (n) {
    case 2: l = {2, 1, {0, 1}, 2}; break;
    case 3: l = {3, 1, {0, 1, 2}, 3}; break;
    case 4: l = {2, 2, {0, 1, 2, 3}, 4}; break;
    case 5: l = {3, 2, {0, 1, 2, 3, 4, 2}, 5}; break;  // the right column is one tall room
    default: l = {3, 2, {0, 1, 2, 3, 4, 5}, 6}; break;
  }
  if (std::bernoulli_distribution(0.5)(rng)) {
    Layout t{l.rows, l.cols, std::vector<int>(l.room_of_cell.size()), l.room_count};
    for (int cy = 0; cy < l.rows; ++cy) {
      for (int cx = 0; cx < l.cols; ++cx) t.room_of_cell[cx * t.cols + cy] = l.room_of_cell[cy * l.cols + cx];
    }
    l = t;
  }
  return l;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

std::optional<Scene> try_generate(std::mt19937_64& rng, const SceneGenParams& p) {
  const int n = std::uniform_int_distribution<int>(p.min_rooms, p.max_rooms)(rng);
  const Layout layout = make_layout(n, rng);

  std::vector<double> xs{0.0}, ys{0.0};
  for (int i = 0; i < layout.cols; ++i) xs.push_back(xs.back() + round_to(uniform(rng, p.min_room_size, p.max_room_size), 0.1));
  for (int i = 0; i < layout.rows; ++i) ys.push_back(ys.back() + round_to(uniform(rng, p.min_room_size, p.max_room_size), 0.1));
  const Bounds bounds{{0.0, 0.0}, {xs.back(), ys.back()}};

  // Shared cell edges between different rooms, as (room a, room b, wall a, wall b).
  struct Edge {
    int ra, rb;
    Vec2 a, b;
  };
  std::vector<Edge> edges;
  auto room_at = [&](int cx, int cy) { return layout.room_of_cell[cy * layout.cols + cx]; };
  for (int cy = 0; cy < layout.rows; ++cy) {
    for (int cx = 0; cx < layout.cols; ++cx) {
      if (cx + 1 < layout.cols && room_at(cx, cy) != room_at(cx + 1, cy)) {
        edges.push_back({room_at(cx, cy), room_at(cx + 1, cy), {xs[cx + 1], ys[cy]}, {xs[cx + 1], ys[cy + 1]}});
      }
      if (cy + 1 < layout.rows && room_at(cx, cy) != room_at(cx, cy + 1)) {
        edges.push_back({room_at(cx, cy), room_at(cx, cy + 1), {xs[cx], ys[cy + 1]}, {xs[cx + 1], ys[cy + 1]}});
      }
    }
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  std::vector<int> parent(layout.room_count);
  std::iota(parent.begin(), parent.end(), 0);

  std::vector<WallSegment> walls;
  std::vector<Door> doors;
  const double half_door = p.door_width / 2.0;
  for (const Edge& e : edges) {
    const int a = find_root(parent, e.ra), b = find_root(parent, e.rb);
    bool door = a != b;
    if (door) parent[a] = b;
    else door = std::bernoulli_distribution(p.extra_door_prob)(rng);
    if (!door) {
      walls.push_back({e.a, e.b});
      continue;
    }
    const bool vertical = e.a.x == e.b.x;
    const double lo = vertical ? e.a.y : e.a.x;
    const double hi = vertical ? e.b.y : e.b.x;
    const double c = round_to(uniform(rng, lo + 0.6 + half_door, hi - 0.6 - half_door), 0.05);
    auto at = [&](double s) { return vertical ? Vec2{e.a.x, s} : Vec2{s, e.a.y}; };
    walls.push_back({at(lo), at(c - half_door)});
    walls.push_back({at(c + half_door), at(hi)});
    doors.push_back({at(c)});
  }

  // Room rectangles: union of their cells.
  std::vector<Room> rooms(layout.room_count);
  std::vector<bool> seen(layout.room_count, false);
  for (int cy = 0; cy < layout.rows; ++cy) {
    for (int cx = 0; cx < layout.cols; ++cx) {
      Room& r = rooms[room_at(cx, cy)];
      const Vec2 lo{xs[cx], ys[cy]}, hi{xs[cx + 1], ys[cy + 1]};
      if (!seen[room_at(cx, cy)]) {
        r.min = lo;
        r.max = hi;
        seen[room_at(cx, cy)] = true;
      } else {
        r.min = {std::min(r.min.x, lo.x), std::min(r.min.y, lo.y)};
        r.max = {std::max(r.max.x, hi.x), std::max(r.max.y, hi.y)};
      }
    }
  }

  // Furnishing plan: goal categories get their own rooms; the rest are fillers.
  std::vector<std::string> goals(kGoalCategories.begin(), kGoalCategories.end());
  std::shuffle(goals.begin(), goals.end(), rng);
  const int goal_count =
      std::uniform_int_distribution<int>(1, std::min(p.max_goal_categories, layout.room_count))(rng);
  goals.resize(goal_count);

  std::vector<int> order(layout.room_count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::string>> contents(layout.room_count);
  for (int i = 0; i < layout.room_count; ++i) {
    Room& room = rooms[order[i]];
    if (i < goal_count) {
      room.label = room_label_for(goals[i]);
      contents[order[i]].push_back(goals[i]);
      if (std::bernoulli_distribution(0.4)(rng)) contents[order[i]].push_back(i % 2 ? "table" : "cabinet");
    } else if (i >= 3 && std::bernoulli_distribution(0.4)(rng)) {
      // A second instance of a goal category in another room.
      const std::string& g = goals[std::uniform_int_distribution<int>(0, goal_count - 1)(rng)];
      room.label = room_label_for(g);
      contents[order[i]].push_back(g);
    } else {
      const auto& filler = filler_rooms()[std::uniform_int_distribution<std::size_t>(0, filler_rooms().size() - 1)(rng)];
      room.label = filler.label;
      contents[order[i]] = filler.objects;
    }
  }

  std::vector<SceneObject> objects;
  for (int ri = 0; ri < layout.room_count; ++ri) {
    const Room& room = rooms[ri];
    for (const std::string& category : contents[ri]) {
      const Furniture& f = furniture(category);
      const double radius = std::clamp(round_to(f.radius + uniform(rng, -0.05, 0.05), 0.01), 0.25, 0.5);
      bool placed = false;
      for (int attempt = 0; attempt < 300 && !placed; ++attempt) {
        // Mostly against a wall, sometimes free-standing.
        const double gap = radius + uniform(rng, 0.1, 0.3);
        Vec2 pos{uniform(rng, room.min.x + gap, room.max.x - gap), uniform(rng, room.min.y + gap, room.max.y - gap)};
        if (std::bernoulli_distribution(0.75)(rng)) {
          switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
            case 0: pos.x = room.min.x + gap; break;
            case 1: pos.x = room.max.x - gap; break;
            case 2: pos.y = room.min.y + gap; break;
            default: pos.y = room.max.y - gap; break;
          }
        }
        pos = {round_to(pos.x, 0.01), round_to(pos.y, 0.01)};
        bool ok = std::all_of(doors.begin(), doors.end(),
                              [&](const Door& d) { return distance(d.center, pos) >= radius + 1.2; });
        ok = ok && std::all_of(objects.begin(), objects.end(), [&](const SceneObject& o) {
               return distance(o.position, pos) >= o.radius + radius + 0.6;
             });
        if (ok) {
          objects.push_back({category, pos, radius, f.height});
          placed = true;
        }
      }
      if (!placed) return std::nullopt;
    }
  }

  Scene scene(bounds, std::move(walls), std::move(objects), std::move(rooms));

  // Every room and every goal region must be reachable from every other.
  const AgentBody body;
  auto nav = std::make_shared<const NavGrid>(scene, body, 0.1);
  std::vector<Cell> room_cells;
  for (const Room& r : scene.rooms()) {
    std::optional<Cell> best;
    double best_clear = -1.0;
    for (double x = r.min.x + 0.3; x < r.max.x - 0.2; x += 0.25) {
      for (double y = r.min.y + 0.3; y < r.max.y - 0.2; y += 0.25) {
        const double c = obstacle_clearance(scene, {x, y});
        if (c > best_clear && nav->is_free(nav->cell_of({x, y}))) {
          best_clear = c;
          best = nav->cell_of({x, y});
        }
      }
    }
    if (!best) return std::nullopt;
    room_cells.push_back(*best);
  }
  DistanceField field(nav, {room_cells.front()});
  for (const Cell& c : room_cells) {
    if (!field.at_cell(c)) return std::nullopt;
  }
  for (const std::string& g : goals) {
    std::vector<Vec2> targets;
    for (const auto* o : scene.instances_of(g)) targets.push_back(o->position);
    const auto region = cells_near(*nav, targets, 1.0);
    if (std::none_of(region.begin(), region.end(), [&](Cell c) { return field.at_cell(c).has_value(); })) {
      return std::nullopt;
    }
  }
  return scene;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneGenParams& params) {
  if (params.min_rooms < 2 || params.max_rooms > 6 || params.min_rooms > params.max_rooms) {
    throw ContractViolation("generate_scene: room count range must lie within [2, 6]");
  }
  if (params.min_room_size < 2.0 * params.door_width + 1.2 || params.max_room_size < params.min_room_size) {
    throw ContractViolation("generate_scene: rooms too small for doors");
  }
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(mix(seed, attempt));
    if (auto scene = try_generate(rng, params)) return *scene;
  }
  throw std::runtime_error("generate_scene: no valid layout for seed " + std::to_string(seed));
}

Episode generate_episode(std::shared_ptr<const Scene> scene, std::uint64_t seed, const AgentBody& body,
                         double d_thres) {
  std::mt19937_64 rng(mix(seed, 0xE915));
  std::vector<std::string> present;
  for (const char* g : kGoalCategories) {
    if (!scene->instances_of(g).empty()) present.emplace_back(g);
  }
  if (present.empty()) throw InvalidInput("generate_episode: scene has no goal category");
  std::shuffle(present.begin(), present.end(), rng);

  auto nav = std::make_shared<const NavGrid>(*scene, body, 0.1);
  for (const std::string& goal : present) {
    std::vector<Vec2> targets;
    for (const auto* o : scene->instances_of(goal)) targets.push_back(o->position);
    DistanceField field(nav, cells_near(*nav, targets, d_thres));

    std::vector<const Room*> start_rooms;
    for (const Room& r : scene->rooms()) {
      if (std::none_of(targets.begin(), targets.end(), [&](Vec2 t) { return r.contains(t); })) start_rooms.push_back(&r);
    }
    std::shuffle(start_rooms.begin(), start_rooms.end(), rng);
    for (const Room* r : start_rooms) {
      for (int attempt = 0; attempt < 200; ++attempt) {
        const Vec2 p{round_to(uniform(rng, r->min.x + 0.4, r->max.x - 0.4), 0.01),
                     round_to(uniform(rng, r->min.y + 0.4, r->max.y - 0.4), 0.01)};
        if (obstacle_clearance(*scene, p) < 0.45) continue;
        if (!field.at(p)) continue;
        if (std::any_of(targets.begin(), targets.end(), [&](Vec2 t) { return distance(t, p) < 2.5; })) continue;
        Episode ep;
        ep.scene = scene;
        ep.goal_category = goal;
        ep.seed = seed;
        ep.start = Pose(p.x, p.y, 0.0, round_to(uniform(rng, 0.0, 2.0 * kPi), 0.01));
        return ep;
      }
    }
  }
  throw InvalidInput("generate_episode: no reachable start outside the goal rooms");
}

std::vector<Episode> write_suite(const std::filesystem::path& dir, int count, std::uint64_t seed,
                                 const SceneGenParams& params) {
  if (count <= 0) throw ContractViolation("write_suite: count must be positive");
  namespace fs = std::filesystem;
  fs::create_directories(dir / "scenes");
  fs::create_directories(dir / "episodes");
  std::vector<Episode> out;
  nlohmann::json list = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%02d", i);
    const fs::path scene_path = dir / "scenes" / (std::string("scene_") + name + ".json");
    const fs::path episode_path = dir / "episodes" / (std::string("ep_") + name + ".json");
    auto scene = std::make_shared<const Scene>(generate_scene(mix(seed, i), params));
    save_scene(*scene, scene_path);
    Episode ep = generate_episode(scene, mix(seed, 1000 + i));
    ep.id = std::string("ep_") + name;
    ep.scene_path = scene_path;
    std::ofstream f(episode_path);
    f << episode_to_json(ep, "../scenes/" + scene_path.filename().string()).dump(2) << '\n';
    list.push_back("episodes/" + episode_path.filename().string());
    out.push_back(std::move(ep));
  }
  std::ofstream f(dir / "suite.json");
  f << nlohmann::json{{"schema", 1}, {"seed", seed}, {"episodes", list}}.dump(2) << '\n';
  return out;
}

}  // namespace wmnav
