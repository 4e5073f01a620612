#include "wmnav/curiosity_map.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace wmnav {

DirectionScores::DirectionScores(std::array<int, kViewCount> values) : values_(values) {
  for (int v : values_) {
    if (v < 0 || v > 10) throw ContractViolation("DirectionScores: score outside [0, 10]");
  }
}

DirectionScores DirectionScores::uniform(int value) {
  std::array<int, kViewCount> v{};
  v.fill(value);
  return DirectionScores(v);
}

std::optional<double> NavScoreMap::find(Cell c) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), c,
                             [](const Entry& e, Cell key) { return e.cell < key; });
  if (it == entries.end() || it->cell != c) return std::nullopt;
  return it->score;
}

CuriosityValueMap::CuriosityValueMap(const GridSpec& grid, double fill)
    : grid_(grid), values_(grid.cell_count(), std::clamp(fill, 0.0, kMaxCuriosity)) {}

double CuriosityValueMap::lower(Cell c, double value) {
  double& slot = values_[grid_.index(c)];
  slot = std::min(slot, std::clamp(value, 0.0, kMaxCuriosity));
  return slot;
}

ExploredMap::ExploredMap(const GridSpec& grid) : grid_(grid), bits_(grid.cell_count(), 0) {}

std::size_t ExploredMap::explored_count() const {
  return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void ExploredMap::mark(Cell c) {
  if (grid_.in_bounds(c)) bits_[grid_.index(c)] = 1;
}

void ExploredMap::mark_observed(const CellSet& cells, std::optional<Vec2> observer, double radius) {
  for (const Cell& c : cells) {
    if (observer && distance(grid_.cell_to_world_center(c), *observer) > radius) continue;
    mark(c);
  }
}

namespace {

template <typename Fn>
void for_each_cell_in_disk(const GridSpec& grid, Vec2 center, double radius, Fn&& fn) {
  const Cell home = grid.world_to_cell(center);
  if (grid.in_bounds(home)) fn(home);
  const int reach = int(std::ceil(radius / grid.resolution())) + 1;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const Cell c{home.x + dx, home.y + dy};
      if (c == home || !grid.in_bounds(c)) continue;
      if (distance(grid.cell_to_world_center(c), center) <= radius) fn(c);
    }
  }
}

}  // namespace

void ExploredMap::mark_visited(Vec2 position, double radius) {
  for_each_cell_in_disk(grid_, position, radius, [&](Cell c) { mark(c); });
}

CuriosityValueMap init_map(const GridSpec& grid) { return CuriosityValueMap(grid, kMaxCuriosity); }

NavScoreMap project_scores(const DirectionScores& scores, const PerViewCells& per_view_navigable,
                           const GridSpec& grid) {
  std::vector<NavScoreMap::Entry> all;
  for (std::size_t view = 0; view < kViewCount; ++view) {
    for (const Cell& c : per_view_navigable[view]) {
      if (!grid.in_bounds(c)) continue;
      all.push_back({c, double(scores[view])});
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.score < b.score;
  });
  // After sorting, the first entry of each run carries the minimum score.
  NavScoreMap nav{grid, {}};
  for (const auto& e : all) {
    if (nav.entries.empty() || nav.entries.back().cell != e.cell) nav.entries.push_back(e);
  }
  return nav;
}

CuriosityValueMap merge(const CuriosityValueMap& prev, const NavScoreMap& nav) {
  if (!(prev.grid() == nav.grid)) throw ContractViolation("merge: grid specs differ");
  CuriosityValueMap out = prev;
  for (const auto& e : nav.entries) out.lower(e.cell, e.score);
  return out;
}

CuriosityValueMap mark_visited(const CuriosityValueMap& map, Vec2 agent_pos, double r_visit,
                               bool goal_flag_raised) {
  CuriosityValueMap out = map;
  if (goal_flag_raised) return out;
  for_each_cell_in_disk(map.grid(), agent_pos, r_visit, [&](Cell c) { out.lower(c, 0.0); });
  return out;
}

AveragedScores direction_scores_from_map(const CuriosityValueMap& map, const PerViewCells& per_view_navigable) {
  AveragedScores avg{};
  for (std::size_t view = 0; view < kViewCount; ++view) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const Cell& c : per_view_navigable[view]) {
      if (!map.grid().in_bounds(c)) continue;
      sum += map.at(c);
      ++n;
    }
    avg[view] = n == 0 ? 0.0 : sum / double(n);
  }
  return avg;
}

std::size_t argmax_direction(const AveragedScores& avg, std::optional<double> previous_bearing) {
  const double best = *std::max_element(avg.begin(), avg.end());
  const auto centers = view_centers_rad();
  std::size_t chosen = kViewCount;
  double chosen_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kViewCount; ++i) {
    if (avg[i] != best) continue;
    if (!previous_bearing) return i;
    const double gap = angular_distance(centers[i], *previous_bearing);
    // Strict comparison keeps the lowest index on equal gaps.
    if (gap < chosen_gap - 1e-12) {
      chosen = i;
      chosen_gap = gap;
    }
  }
  return chosen;
}

int curiosity_to_gray(double score) {
  return int(std::lround(std::clamp(score, 0.0, kMaxCuriosity) * 25.5));
}

std::string to_pgm(const CuriosityValueMap& map) {
  const int n = map.grid().map_size();
  std::ostringstream out;
  out << "P2\n" << n << ' ' << n << "\n255\n";
  for (int row = 0; row < n; ++row) {
    const int y = n - 1 - row;
    for (int x = 0; x < n; ++x) {
      if (x) out << ' ';
      out << curiosity_to_gray(map.at({x, y}));
    }
    out << '\n';
  }
  return out.str();
}

void write_pgm(const CuriosityValueMap& map, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << to_pgm(map);
}

CuriosityValueMap read_pgm(const std::filesystem::path& path, const GridSpec& grid) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P2" || w != grid.map_size() || h != grid.map_size() || maxval != 255) {
    throw std::runtime_error(path.string() + ": not a " + std::to_string(grid.map_size()) + "x" +
                             std::to_string(grid.map_size()) + " P2 map export");
  }
  CuriosityValueMap map(grid, kMaxCuriosity);
  for (int row = 0; row < h; ++row) {
    for (int x = 0; x < w; ++x) {
      int gray = 0;
      if (!(f >> gray)) throw std::runtime_error(path.string() + ": truncated pixel data");
      map.lower({x, h - 1 - row}, gray / 25.5);
    }
  }
  return map;
}

std::string cvm_snapshot_name(int step) { return "cvm_step" + std::to_string(step) + ".pgm"; }

}  // namespace wmnav
