#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmnav/geometry.hpp"

namespace wmnav {

inline constexpr double kMaxCuriosity = 10.0;

/// Integer goal-likelihood per panoramic view, each in {0..10}.
class DirectionScores {
 public:
  DirectionScores() { values_.fill(0); }
  explicit DirectionScores(std::array<int, kViewCount> values);

  static DirectionScores uniform(int value);

  int operator[](std::size_t i) const { return values_[i]; }
  const std::array<int, kViewCount>& values() const { return values_; }

  friend bool operator==(const DirectionScores&, const DirectionScores&) = default;

 private:
  std::array<int, kViewCount> values_;
};

/// Per-view mean of map values over that view's navigable cells.
using AveragedScores = std::array<double, kViewCount>;

/// One navigable cell-set per panoramic view, in view order.
using PerViewCells = std::array<CellSet, kViewCount>;

/// Sparse top-down score layer produced from a single panoramic prediction.
struct NavScoreMap {
  struct Entry {
    Cell cell;
    double score;
  };

  GridSpec grid;
  std::vector<Entry> entries;  // sorted by cell, unique

  std::optional<double> find(Cell c) const;
};

/// Top-down grid of goal-presence likelihoods in [0, 10]. Values only ever
/// decrease: every update is a cell-wise minimum or a zeroing.
class CuriosityValueMap {
 public:
  explicit CuriosityValueMap(const GridSpec& grid, double fill = kMaxCuriosity);

  const GridSpec& grid() const { return grid_; }
  double at(Cell c) const { return values_[grid_.index(c)]; }
  std::span<const double> values() const { return values_; }

  /// Lowers a cell to `value` if lower than what it holds; returns the stored value.
  double lower(Cell c, double value);

  friend bool operator==(const CuriosityValueMap&, const CuriosityValueMap&) = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Observed-navigable cells plus the visited footprint. Bits only flip on.
class ExploredMap {
 public:
  explicit ExploredMap(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  bool is_explored(Cell c) const { return grid_.in_bounds(c) && bits_[grid_.index(c)] != 0; }
  bool is_explored(Vec2 p) const { return is_explored(grid_.world_to_cell(p)); }
  std::size_t explored_count() const;

  /// Marks observed cells; when `observer` and `radius` are given only cells whose
  /// centers lie within `radius` of the observer are marked.
  void mark_observed(const CellSet& cells, std::optional<Vec2> observer = std::nullopt,
                     double radius = std::numeric_limits<double>::infinity());
  void mark_visited(Vec2 position, double radius);
  void mark(Cell c);

 private:
  GridSpec grid_;
  std::vector<std::uint8_t> bits_;
};

CuriosityValueMap init_map(const GridSpec& grid);

/// Assigns each view's score to the view's navigable cells; a cell seen by several
/// views keeps the smallest score.
NavScoreMap project_scores(const DirectionScores& scores, const PerViewCells& per_view_navigable,
                           const GridSpec& grid);

/// Cell-wise min(prev, nav) where nav is defined; prev elsewhere.
CuriosityValueMap merge(const CuriosityValueMap& prev, const NavScoreMap& nav);

/// Zeroes cells whose centers lie within `r_visit` of `agent_pos` (always including the
/// containing cell). No-op while `goal_flag_raised` holds.
CuriosityValueMap mark_visited(const CuriosityValueMap& map, Vec2 agent_pos, double r_visit,
                               bool goal_flag_raised = false);

AveragedScores direction_scores_from_map(const CuriosityValueMap& map, const PerViewCells& per_view_navigable);

/// Index of the largest average. Exact ties go to the view whose center is closest to
/// `previous_bearing` (agent-relative), then to the lowest index.
std::size_t argmax_direction(const AveragedScores& avg, std::optional<double> previous_bearing = std::nullopt);

/// Pixel value used for map exports: round(score * 25.5).
int curiosity_to_gray(double score);

/// Plain-text P2 graymap, one pixel per cell, north (max y) up.
std::string to_pgm(const CuriosityValueMap& map);
void write_pgm(const CuriosityValueMap& map, const std::filesystem::path& path);
/// Reads a P2 export back; values come back as gray / 25.5.
CuriosityValueMap read_pgm(const std::filesystem::path& path, const GridSpec& grid);

std::string cvm_snapshot_name(int step);

}  // namespace wmnav
