#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "wmnav/simulator.hpp"

namespace wmnav {

inline constexpr std::array<const char*, 6> kGoalCategories{"bed", "sofa", "toilet", "tv", "plant", "chair"};

struct SceneGenParams {
  int min_rooms = 2;
  int max_rooms = 6;
  double min_room_size = 3.5;
  double max_room_size = 5.0;
  double door_width = 1.0;
  /// Chance that a wall between rooms not on the spanning tree also gets a door.
  double extra_door_prob = 0.3;
  int max_goal_categories = 3;
};

/// Rooms on a rectangular grid joined by doors along a random spanning tree. Each
/// room is labeled and furnished; 1 to max_goal_categories goal categories appear.
Scene generate_scene(std::uint64_t seed, const SceneGenParams& params = {});

/// Picks a goal category present in the scene and a start pose in a room without
/// that category, from which the goal region is reachable. Throws InvalidInput if
/// no such start exists.
Episode generate_episode(std::shared_ptr<const Scene> scene, std::uint64_t seed, const AgentBody& body = {},
                         double d_thres = 1.0);

/// Writes scenes/, episodes/ and suite.json under `dir`; returns the episodes.
std::vector<Episode> write_suite(const std::filesystem::path& dir, int count, std::uint64_t seed,
                                 const SceneGenParams& params = {});

}  // namespace wmnav
