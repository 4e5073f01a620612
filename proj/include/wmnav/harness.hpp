#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wmnav/http_backend.hpp"
#include "wmnav/image.hpp"
#include "wmnav/policy.hpp"

namespace wmnav {

/// Mean of S·l/max(p, l). A success with p = 0 counts 1. Throws ContractViolation
/// on an empty list.
double compute_spl(std::span<const EpisodeResult> results);
double compute_sr(std::span<const EpisodeResult> results);

struct CategoryStats {
  int episodes = 0;
  int successes = 0;
  double sr = 0.0;
  double spl = 0.0;

  friend bool operator==(const CategoryStats&, const CategoryStats&) = default;
};

struct BenchmarkSummary {
  int episodes = 0;
  int successes = 0;
  double sr = 0.0;
  double spl = 0.0;
  std::map<std::string, CategoryStats> per_category;
  std::map<std::string, int> failures;  // by failure reason
  /// Paths relative to the output directory.
  std::vector<std::string> artifacts;

  friend bool operator==(const BenchmarkSummary&, const BenchmarkSummary&) = default;
};

BenchmarkSummary summarize(std::span<const EpisodeResult> results);
nlohmann::json summary_to_json(const BenchmarkSummary& summary);

nlohmann::json result_to_json(const EpisodeResult& result);
EpisodeResult result_from_json(const nlohmann::json& doc, const std::string& source = "<result>");
/// Reads results.jsonl; every line must parse.
std::vector<EpisodeResult> load_results(const std::filesystem::path& path);

struct Suite {
  std::filesystem::path file;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> episodes;  // resolved against the suite's directory
};

/// Throws InvalidInput naming the file and field; an empty episode list is an error.
Suite load_suite(const std::filesystem::path& path);

/// Policy parameters from a JSON document with sections "grid", "camera", "body" and
/// "sampling" plus top-level scalars. Missing keys keep their defaults; unknown keys
/// are rejected.
PolicyConfig policy_config_from_json(const nlohmann::json& doc, const std::string& source = "<config>");
nlohmann::json policy_config_to_json(const PolicyConfig& config);
PolicyConfig load_policy_config(const std::filesystem::path& path);

enum class BackendKind { Oracle, Http, Replay };
std::optional<BackendKind> backend_kind_from_string(std::string_view s);

struct BenchmarkOptions {
  BackendKind backend = BackendKind::Oracle;
  std::filesystem::path out_dir;
  PolicyConfig policy;
  std::optional<int> max_steps;
  /// Episodes run concurrently; 0 uses the hardware core count.
  int jobs = 0;
  /// Writes every VLM exchange to <out>/vlm_log.jsonl (plus the raw HTTP log for http).
  bool log_vlm = false;
  /// Sampling seed forwarded to the HTTP backend.
  std::optional<std::uint64_t> seed;
  /// Records every exchange into a replay file.
  std::optional<std::filesystem::path> record;
  /// Required for BackendKind::Replay.
  std::optional<std::filesystem::path> replay_file;
  HttpBackendConfig http;
  /// Overrides the backend choice; called once per episode.
  std::function<std::shared_ptr<VlmBackend>(const Episode&)> make_backend;
  /// Progress hook, called under a lock as episodes finish.
  std::function<void(const EpisodeResult&)> on_result;
};

struct BenchmarkRun {
  BenchmarkSummary summary;
  std::vector<EpisodeResult> results;  // suite order
};

/// Runs every episode of the suite and writes summary.json, results.jsonl and
/// episodes/<id>/{trajectory.jsonl, episode_meta.json, cvm_*.pgm, snapshot.ppm}.
/// Episode files are all loaded before anything runs.
BenchmarkRun run_benchmark(const Suite& suite, const BenchmarkOptions& options);
BenchmarkRun run_benchmark(const std::filesystem::path& suite_file, const BenchmarkOptions& options);

/// Top-down map_size² raster on the episode grid, north up: the final curiosity map
/// as gray (round(score·25.5)), walls blue, goal instances green, trajectory red.
RgbImage render_trajectory_snapshot(const std::vector<Pose>& trajectory, const Scene& scene,
                                    const std::string& goal_category, const GridSpec& grid,
                                    const CuriosityValueMap* final_map);
void emit_trajectory_snapshot(const EpisodeResult& result, const Episode& episode, const PolicyConfig& config,
                              const std::filesystem::path& path);
/// Rebuilds the snapshot from an episode artifact directory (or a file inside it).
/// Returns the written path.
std::filesystem::path snapshot_from_artifacts(const std::filesystem::path& episode_artifact,
                                              const std::optional<std::filesystem::path>& out = std::nullopt);

inline constexpr Rgb kWallColor{0, 0, 255};
inline constexpr Rgb kTrajectoryColor{255, 0, 0};
inline constexpr Rgb kGoalColor{0, 255, 0};

}  // namespace wmnav
