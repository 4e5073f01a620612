#include "wmnav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "wmnav/oracle_backend.hpp"
#include "wmnav/replay.hpp"

namespace wmnav {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput(path.string() + ": cannot open");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": not valid JSON (" + e.what() + ")");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

double spl_term(const EpisodeResult& r) {
  if (!r.success) return 0.0;
  const double l = r.optimal_length;
  const double p = r.path_length;
  if (p <= 0.0) return 1.0;
  return l / std::max(p, l);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& source,
                    const std::string& path) {
  if (!obj.is_object()) detail::fail_field(source, path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      detail::fail_field(source, path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

}  // namespace

double compute_sr(std::span<const EpisodeResult> results) {
  if (results.empty()) throw ContractViolation("compute_sr: no results");
  const auto n = std::count_if(results.begin(), results.end(), [](const EpisodeResult& r) { return r.success; });
  return double(n) / double(results.size());
}

double compute_spl(std::span<const EpisodeResult> results) {
  if (results.empty()) throw ContractViolation("compute_spl: no results");
  double sum = 0.0;
  for (const auto& r : results) sum += spl_term(r);
  return sum / double(results.size());
}

BenchmarkSummary summarize(std::span<const EpisodeResult> results) {
  BenchmarkSummary s;
  s.episodes = int(results.size());
  s.sr = compute_sr(results);
  s.spl = compute_spl(results);
  std::map<std::string, std::vector<EpisodeResult>> by_category;
  for (const auto& r : results) {
    s.successes += r.success;
    by_category[r.goal_category].push_back(r);
    if (r.failure_reason) ++s.failures[std::string(to_string(*r.failure_reason))];
  }
  for (const auto& [category, rs] : by_category) {
    CategoryStats c;
    c.episodes = int(rs.size());
    c.successes = int(std::count_if(rs.begin(), rs.end(), [](const EpisodeResult& r) { return r.success; }));
    c.sr = compute_sr(rs);
    c.spl = compute_spl(rs);
    s.per_category[category] = c;
  }
  return s;
}

json summary_to_json(const BenchmarkSummary& s) {
  json cats = json::object();
  for (const auto& [name, c] : s.per_category) {
    cats[name] = {{"episodes", c.episodes}, {"successes", c.successes}, {"sr", c.sr}, {"spl", c.spl}};
  }
  return {{"episodes", s.episodes}, {"successes", s.successes}, {"sr", s.sr},
          {"spl", s.spl},           {"per_category", cats},     {"failures", s.failures},
          {"artifacts", s.artifacts}};
}

json result_to_json(const EpisodeResult& r) {
  json j{{"id", r.id},
         {"goal_category", r.goal_category},
         {"success", r.success},
         {"stopped", r.stopped},
         {"path_length", r.path_length},
         {"optimal_length", r.optimal_length},
         {"steps", r.steps},
         {"fallbacks", r.fallbacks}};
  j["failure_reason"] = r.failure_reason ? json(to_string(*r.failure_reason)) : json();
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

EpisodeResult result_from_json(const json& doc, const std::string& source) {
  using detail::get;
  using detail::get_or;
  EpisodeResult r;
  r.id = get<std::string>(doc, "id", source);
  r.goal_category = get_or<std::string>(doc, "goal_category", "", source);
  r.success = get<bool>(doc, "success", source);
  r.stopped = get_or<bool>(doc, "stopped", false, source);
  r.path_length = get<double>(doc, "path_length", source);
  r.optimal_length = get<double>(doc, "optimal_length", source);
  r.steps = get_or<int>(doc, "steps", 0, source);
  r.fallbacks = get_or<int>(doc, "fallbacks", 0, source);
  r.error = get_or<std::string>(doc, "error", "", source);
  if (r.path_length < 0.0) detail::fail_field(source, "path_length", "negative");
  if (r.optimal_length < 0.0) detail::fail_field(source, "optimal_length", "negative");
  if (doc.contains("failure_reason") && !doc["failure_reason"].is_null()) {
    const auto name = get<std::string>(doc, "failure_reason", source);
    r.failure_reason = failure_reason_from_string(name);
    if (!r.failure_reason) detail::fail_field(source, "failure_reason", "unknown value '" + name + "'");
  }
  return r;
}

std::vector<EpisodeResult> load_results(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput(path.string() + ": cannot open");
  std::vector<EpisodeResult> out;
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string source = path.string() + ":" + std::to_string(n);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput(source + ": not valid JSON (" + e.what() + ")");
    }
    out.push_back(result_from_json(doc, source));
  }
  return out;
}

Suite load_suite(const fs::path& path) {
  const std::string source = path.string();
  const json doc = read_json(path);
  Suite s;
  s.file = path;
  s.seed = detail::get_or<std::uint64_t>(doc, "seed", 0, source);
  const json& list = detail::require(doc, "episodes", source, "");
  if (!list.is_array()) detail::fail_field(source, "episodes", "expected an array");
  if (list.empty()) detail::fail_field(source, "episodes", "empty suite");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string field = "episodes[" + std::to_string(i) + "]";
    const fs::path p = detail::as<std::string>(list[i], source, field);
    s.episodes.push_back(p.is_absolute() ? p : path.parent_path() / p);
  }
  return s;
}

PolicyConfig policy_config_from_json(const json& doc, const std::string& source) {
  using detail::get_or;
  PolicyConfig c;
  reject_unknown(doc,
                 {"grid", "camera", "body", "sampling", "floor_eps", "max_range", "r_visit", "d_thres", "max_steps",
                  "explored_observe_radius", "projection_stride", "panorama_downscale", "parse_retries"},
                 source, "");
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    reject_unknown(g, {"map_size", "resolution"}, source, "grid");
    c.map_size = get_or<int>(g, "map_size", c.map_size, source, "grid");
    c.resolution = get_or<double>(g, "resolution", c.resolution, source, "grid");
    if (c.map_size <= 0) detail::fail_field(source, "grid.map_size", "must be positive");
    if (c.resolution <= 0.0) detail::fail_field(source, "grid.resolution", "must be positive");
  }
  if (doc.contains("camera")) {
    const json& g = doc["camera"];
    reject_unknown(g, {"width", "height", "hfov_deg", "pitch_deg"}, source, "camera");
    const int w = get_or<int>(g, "width", c.camera.width(), source, "camera");
    const int h = get_or<int>(g, "height", c.camera.height(), source, "camera");
    const double hfov = get_or<double>(g, "hfov_deg", rad_to_deg(c.camera.hfov()), source, "camera");
    const double pitch = get_or<double>(g, "pitch_deg", rad_to_deg(c.camera.pitch_down()), source, "camera");
    try {
      c.camera = CameraModel(w, h, deg_to_rad(hfov), deg_to_rad(pitch));
    } catch (const ContractViolation& e) {
      detail::fail_field(source, "camera", e.what());
    }
  }
  if (doc.contains("body")) {
    const json& g = doc["body"];
    reject_unknown(g, {"radius", "height", "camera_height"}, source, "body");
    c.body.radius = get_or<double>(g, "radius", c.body.radius, source, "body");
    c.body.height = get_or<double>(g, "height", c.body.height, source, "body");
    c.body.camera_height = get_or<double>(g, "camera_height", c.body.camera_height, source, "body");
    if (c.body.radius <= 0.0) detail::fail_field(source, "body.radius", "must be positive");
  }
  if (doc.contains("sampling")) {
    const json& g = doc["sampling"];
    reject_unknown(g, {"k", "dtheta_min_deg", "r_max", "dtheta_dense_deg", "r_min"}, source, "sampling");
    auto& s = c.sampling;
    s.k = get_or<int>(g, "k", s.k, source, "sampling");
    s.dtheta_min = deg_to_rad(get_or<double>(g, "dtheta_min_deg", rad_to_deg(s.dtheta_min), source, "sampling"));
    s.r_max = get_or<double>(g, "r_max", s.r_max, source, "sampling");
    s.dtheta_dense =
        deg_to_rad(get_or<double>(g, "dtheta_dense_deg", rad_to_deg(s.dtheta_dense), source, "sampling"));
    s.r_min = get_or<double>(g, "r_min", s.r_min, source, "sampling");
    if (s.k < 1) detail::fail_field(source, "sampling.k", "must be at least 1");
    if (s.r_max <= 0.0) detail::fail_field(source, "sampling.r_max", "must be positive");
    if (s.dtheta_dense <= 0.0) detail::fail_field(source, "sampling.dtheta_dense_deg", "must be positive");
  }
  c.floor_eps = get_or<double>(doc, "floor_eps", c.floor_eps, source);
  c.max_range = get_or<double>(doc, "max_range", c.max_range, source);
  c.r_visit = get_or<double>(doc, "r_visit", c.r_visit, source);
  c.d_thres = get_or<double>(doc, "d_thres", c.d_thres, source);
  c.max_steps = get_or<int>(doc, "max_steps", c.max_steps, source);
  c.explored_observe_radius = get_or<double>(doc, "explored_observe_radius", c.explored_observe_radius, source);
  c.projection_stride = get_or<int>(doc, "projection_stride", c.projection_stride, source);
  c.panorama_downscale = get_or<int>(doc, "panorama_downscale", c.panorama_downscale, source);
  c.parse_retries = get_or<int>(doc, "parse_retries", c.parse_retries, source);
  if (c.d_thres <= 0.0) detail::fail_field(source, "d_thres", "must be positive");
  if (c.max_steps < 1) detail::fail_field(source, "max_steps", "must be at least 1");
  if (c.projection_stride < 1) detail::fail_field(source, "projection_stride", "must be at least 1");
  if (c.panorama_downscale < 1) detail::fail_field(source, "panorama_downscale", "must be at least 1");
  return c;
}

json policy_config_to_json(const PolicyConfig& c) {
  return {{"grid", {{"map_size", c.map_size}, {"resolution", c.resolution}}},
          {"camera",
           {{"width", c.camera.width()},
            {"height", c.camera.height()},
            {"hfov_deg", rad_to_deg(c.camera.hfov())},
            {"pitch_deg", rad_to_deg(c.camera.pitch_down())}}},
          {"body", {{"radius", c.body.radius}, {"height", c.body.height}, {"camera_height", c.body.camera_height}}},
          {"sampling",
           {{"k", c.sampling.k},
            {"dtheta_min_deg", rad_to_deg(c.sampling.dtheta_min)},
            {"r_max", c.sampling.r_max},
            {"dtheta_dense_deg", rad_to_deg(c.sampling.dtheta_dense)},
            {"r_min", c.sampling.r_min}}},
          {"floor_eps", c.floor_eps},
          {"max_range", c.max_range},
          {"r_visit", c.r_visit},
          {"d_thres", c.d_thres},
          {"max_steps", c.max_steps},
          {"explored_observe_radius", c.explored_observe_radius},
          {"projection_stride", c.projection_stride},
          {"panorama_downscale", c.panorama_downscale},
          {"parse_retries", c.parse_retries}};
}

PolicyConfig load_policy_config(const fs::path& path) { return policy_config_from_json(read_json(path), path.string()); }

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
  if (s == "oracle") return BackendKind::Oracle;
  if (s == "http") return BackendKind::Http;
  if (s == "replay") return BackendKind::Replay;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Snapshots

RgbImage render_trajectory_snapshot(const std::vector<Pose>& trajectory, const Scene& scene,
                                    const std::string& goal_category, const GridSpec& grid,
                                    const CuriosityValueMap* final_map) {
  const int n = grid.map_size();
  RgbImage img(n, n);
  // Pixel row 0 is the northernmost grid row, matching the PGM export.
  auto pixel = [&](Vec2 p) {
    const Cell c = grid.world_to_cell(p);
    return std::array<int, 2>{c.x, n - 1 - c.y};
  };
  if (final_map) {
    if (!(final_map->grid() == grid)) throw ContractViolation("render_trajectory_snapshot: map grid mismatch");
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const auto g = std::uint8_t(curiosity_to_gray(final_map->at({x, y})));
        img.set(x, n - 1 - y, {g, g, g});
      }
    }
  }
  const double step = grid.resolution() / 2.0;
  for (const auto& w : scene.barrier_segments()) {
    const double len = distance(w.a, w.b);
    const int samples = std::max(1, int(std::ceil(len / step)));
    for (int i = 0; i <= samples; ++i) {
      const auto px = pixel(w.a + (w.b - w.a) * (double(i) / samples));
      img.plot(px[0], px[1], kWallColor);
    }
  }
  const int goal_px = std::max(1, int(std::lround(0.15 / grid.resolution())));
  for (const auto* o : scene.instances_of(goal_category)) {
    const auto px = pixel(o->position);
    draw_disk(img, px[0], px[1], std::max(goal_px, int(std::lround(o->radius / grid.resolution()))), kGoalColor);
  }
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto a = pixel(trajectory[i - 1].position());
    const auto b = pixel(trajectory[i].position());
    draw_line(img, a[0], a[1], b[0], b[1], kTrajectoryColor);
  }
  if (trajectory.size() == 1) {
    const auto a = pixel(trajectory.front().position());
    img.plot(a[0], a[1], kTrajectoryColor);
  }
  return img;
}

void emit_trajectory_snapshot(const EpisodeResult& result, const Episode& episode, const PolicyConfig& config,
                              const fs::path& path) {
  if (!episode.scene) throw ContractViolation("emit_trajectory_snapshot: episode has no scene");
  const GridSpec grid = config.grid_for(episode.start.position());
  const RgbImage img =
      render_trajectory_snapshot(result.trajectory, *episode.scene, episode.goal_category, grid, result.final_map.get());
  write_text(path, encode_ppm(img));
}

fs::path snapshot_from_artifacts(const fs::path& episode_artifact, const std::optional<fs::path>& out) {
  const fs::path dir = fs::is_directory(episode_artifact) ? episode_artifact : episode_artifact.parent_path();
  const fs::path meta_path = dir / "episode_meta.json";
  const std::string source = meta_path.string();
  const json meta = read_json(meta_path);
  const Episode episode = load_episode(detail::get<std::string>(meta, "episode_file", source));
  const json& g = detail::require(meta, "grid", source, "");
  const GridSpec grid(detail::get<int>(g, "map_size", source, "grid"), detail::get<double>(g, "resolution", source, "grid"),
                      detail::get_vec2(g, "origin", source, "grid"));
  std::vector<Pose> trajectory;
  const json& traj = detail::require(meta, "trajectory", source, "");
  if (!traj.is_array()) detail::fail_field(source, "trajectory", "expected an array");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::string field = "trajectory[" + std::to_string(i) + "]";
    if (!traj[i].is_array() || traj[i].size() != 3) detail::fail_field(source, field, "expected [x, y, yaw]");
    const auto v = detail::as<std::vector<double>>(traj[i], source, field);
    trajectory.emplace_back(v[0], v[1], 0.0, v[2]);
  }
  std::optional<CuriosityValueMap> map;
  if (meta.contains("final_map") && !meta["final_map"].is_null()) {
    map = read_pgm(dir / detail::get<std::string>(meta, "final_map", source), grid);
  }
  const RgbImage img =
      render_trajectory_snapshot(trajectory, *episode.scene, episode.goal_category, grid, map ? &*map : nullptr);
  const fs::path target = out.value_or(dir / "snapshot.ppm");
  write_text(target, encode_ppm(img));
  return target;
}

// ---------------------------------------------------------------------------
// Benchmark

BenchmarkRun run_benchmark(const fs::path& suite_file, const BenchmarkOptions& options) {
  return run_benchmark(load_suite(suite_file), options);
}

BenchmarkRun run_benchmark(const Suite& suite, const BenchmarkOptions& options) {
  if (suite.episodes.empty()) throw InvalidInput(suite.file.string() + ": field 'episodes': empty suite");
  if (options.out_dir.empty()) throw ContractViolation("run_benchmark: no output directory");

  std::vector<Episode> episodes;
  std::set<std::string> ids;
  for (const auto& path : suite.episodes) {
    Episode ep = load_episode(path);
    if (ep.id.empty()) ep.id = path.stem().string();
    if (!ids.insert(ep.id).second) throw InvalidInput(path.string() + ": field 'id': duplicate '" + ep.id + "'");
    episodes.push_back(std::move(ep));
  }
  fs::create_directories(options.out_dir / "episodes");

  // Shared pieces: the HTTP and replay backends are global so rate limits and
  // recorded-response cursors span the whole run.
  std::shared_ptr<ReplayRecorder> recorder;
  if (options.record) recorder = std::make_shared<ReplayRecorder>(*options.record);
  std::shared_ptr<ReplayRecorder> vlm_log;
  if (options.log_vlm) vlm_log = std::make_shared<ReplayRecorder>(options.out_dir / "vlm_log.jsonl");
  std::shared_ptr<VlmBackend> shared;
  if (!options.make_backend) {
    if (options.backend == BackendKind::Http) {
      HttpBackendConfig http = options.http;
      if (options.seed) http.seed = options.seed;
      if (options.log_vlm) http.log_path = options.out_dir / "vlm_http.jsonl";
      shared = std::make_shared<HttpBackend>(http);
    } else if (options.backend == BackendKind::Replay) {
      if (!options.replay_file) throw ContractViolation("run_benchmark: replay backend needs a replay file");
      shared = std::make_shared<ReplayBackend>(*options.replay_file);
    }
  }
  auto backend_for = [&](const Episode& ep) {
    std::shared_ptr<VlmBackend> b;
    if (options.make_backend) {
      b = options.make_backend(ep);
    } else if (shared) {
      b = shared;
    } else {
      OracleConfig oc;
      oc.camera = options.policy.camera;
      oc.body = options.policy.body;
      oc.max_range = options.policy.max_range;
      oc.d_thres = options.policy.d_thres;
      oc.resolution = options.policy.resolution;
      b = std::make_shared<OracleBackend>(ep.scene, ep.goal_category, oc);
    }
    if (recorder) b = std::make_shared<RecordingBackend>(b, recorder);
    if (vlm_log) b = std::make_shared<RecordingBackend>(b, vlm_log);
    return b;
  };

  std::vector<EpisodeResult> results(episodes.size());
  std::atomic<std::size_t> next{0};
  std::mutex hook_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < episodes.size(); i = next++) {
      const Episode& ep = episodes[i];
      const fs::path dir = options.out_dir / "episodes" / ep.id;
      EpisodeResult r;
      try {
        fs::create_directories(dir);
        auto backend = backend_for(ep);
        RunOptions ro;
        ro.out_dir = dir;
        ro.max_steps = options.max_steps;
        r = run_episode(ep, *backend, options.policy, ro);
      } catch (const std::exception& e) {
        r.id = ep.id;
        r.goal_category = ep.goal_category;
        r.failure_reason = FailureReason::Error;
        r.error = e.what();
        r.trajectory = {ep.start};
      }
      const GridSpec grid = options.policy.grid_for(ep.start.position());
      json traj = json::array();
      for (const Pose& p : r.trajectory) traj.push_back({p.x, p.y, p.yaw});
      json meta = result_to_json(r);
      meta["episode_file"] = fs::absolute(suite.episodes[i]).lexically_normal().string();
      meta["grid"] = {{"map_size", grid.map_size()},
                      {"resolution", grid.resolution()},
                      {"origin", {grid.origin().x, grid.origin().y}}};
      meta["trajectory"] = traj;
      meta["final_map"] = r.final_map ? json(cvm_snapshot_name(r.steps)) : json();
      write_text(dir / "episode_meta.json", meta.dump(2) + "\n");
      emit_trajectory_snapshot(r, ep, options.policy, dir / "snapshot.ppm");
      if (options.on_result) {
        std::lock_guard lock(hook_mutex);
        options.on_result(r);
      }
      results[i] = std::move(r);
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t jobs = std::min<std::size_t>(options.jobs > 0 ? std::size_t(options.jobs) : hw, episodes.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  BenchmarkRun run;
  run.summary = summarize(results);
  std::string lines;
  for (const auto& r : results) lines += result_to_json(r).dump() + "\n";
  write_text(options.out_dir / "results.jsonl", lines);

  std::vector<std::string>& artifacts = run.summary.artifacts;
  artifacts.push_back("results.jsonl");
  if (options.log_vlm) artifacts.push_back("vlm_log.jsonl");
  for (const auto& r : results) {
    const std::string base = "episodes/" + r.id + "/";
    for (const char* name : {"episode_meta.json", "snapshot.ppm"}) artifacts.push_back(base + name);
    if (fs::exists(options.out_dir / base / "trajectory.jsonl")) artifacts.push_back(base + "trajectory.jsonl");
    if (r.final_map) artifacts.push_back(base + cvm_snapshot_name(r.steps));
  }
  std::sort(artifacts.begin(), artifacts.end());
  for (const auto& a : artifacts) {
    if (!fs::exists(options.out_dir / a)) throw std::runtime_error("run_benchmark: artifact missing: " + a);
  }
  json summary = summary_to_json(run.summary);
  summary["suite"] = suite.file.filename().string();
  summary["suite_seed"] = suite.seed;
  write_text(options.out_dir / "summary.json", summary.dump(2) + "\n");
  run.results = std::move(results);
  return run;
}

}  // namespace wmnav
