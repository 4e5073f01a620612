#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wmnav/harness.hpp"
#include "wmnav/scene_gen.hpp"

using namespace wmnav;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"wmnav: world-model object-goal navigation benchmark"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a suite and write artifacts");
  std::string suite_file, backend_name = "oracle", out_dir, config_file, record_file, replay_file, prompts_dir;
  std::string endpoint, model;
  std::optional<int> max_steps;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool log_vlm = false;
  run->add_option("--suite", suite_file, "suite.json")->required()->check(CLI::ExistingFile);
  run->add_option("--backend", backend_name, "oracle, http or replay")
      ->check(CLI::IsMember({"oracle", "http", "replay"}));
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--max-steps", max_steps, "Step budget per episode")->check(CLI::PositiveNumber);
  run->add_flag("--log-vlm", log_vlm, "Log every VLM exchange");
  run->add_option("--seed", seed, "Sampling seed sent to the http backend");
  run->add_option("--config", config_file, "Policy config JSON")->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Concurrent episodes (0: all cores)")->check(CLI::NonNegativeNumber);
  run->add_option("--record", record_file, "Write a replay file of every exchange");
  run->add_option("--replay-file", replay_file, "Replay file for --backend replay")->check(CLI::ExistingFile);
  run->add_option("--prompts", prompts_dir, "Directory overriding the prompt templates")->check(CLI::ExistingDirectory);
  run->add_option("--endpoint", endpoint, "Base URL of an OpenAI-style API (http backend)");
  run->add_option("--model", model, "Model name (http backend)");

  // spl
  auto* spl = app.add_subcommand("spl", "SR and SPL of a results.jsonl");
  std::string results_file;
  spl->add_option("--results", results_file, "results.jsonl")->required()->check(CLI::ExistingFile);

  // snapshot
  auto* snap = app.add_subcommand("snapshot", "Render the top-down trajectory image of a finished episode");
  std::string episode_artifact, snapshot_out;
  snap->add_option("--episode", episode_artifact, "Episode artifact directory or its trajectory.jsonl")
      ->required()
      ->check(CLI::ExistingPath);
  snap->add_option("--out", snapshot_out, "Output PPM (default: snapshot.ppm next to the log)");

  // gen-suite
  auto* gen = app.add_subcommand("gen-suite", "Generate a procedural episode suite");
  std::string gen_out;
  int gen_count = 20;
  std::uint64_t gen_seed = 7;
  gen->add_option("--out", gen_out, "Suite directory")->required();
  gen->add_option("--count", gen_count, "Number of episodes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      BenchmarkOptions opt;
      opt.backend = *backend_kind_from_string(backend_name);
      opt.out_dir = out_dir;
      if (!config_file.empty()) opt.policy = load_policy_config(config_file);
      if (!prompts_dir.empty()) opt.policy.templates = PromptTemplates::load(prompts_dir);
      opt.max_steps = max_steps;
      opt.jobs = jobs;
      opt.log_vlm = log_vlm;
      opt.seed = seed;
      if (!record_file.empty()) opt.record = fs::path(record_file);
      if (!replay_file.empty()) opt.replay_file = fs::path(replay_file);
      if (opt.backend == BackendKind::Replay && !opt.replay_file) {
        std::cerr << "error: --backend replay needs --replay-file\n";
        return 2;
      }
      if (!endpoint.empty()) opt.http.base_url = endpoint;
      if (!model.empty()) opt.http.model = model;
      opt.on_result = [](const EpisodeResult& r) {
        std::fprintf(stderr, "%-8s %-8s %s steps=%d path=%.2f opt=%.2f%s\n", r.id.c_str(), r.goal_category.c_str(),
                     r.success ? "success" : "fail   ", r.steps, r.path_length, r.optimal_length,
                     r.failure_reason ? (" (" + std::string(to_string(*r.failure_reason)) + ")").c_str() : "");
      };
      const auto t0 = std::chrono::steady_clock::now();
      const BenchmarkRun res = run_benchmark(fs::path(suite_file), opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("episodes %d  SR %.3f  SPL %.3f  (%.1f s)\n", res.summary.episodes, res.summary.sr,
                  res.summary.spl, secs);
      for (const auto& [cat, s] : res.summary.per_category) {
        std::printf("  %-8s %2d episodes  SR %.3f  SPL %.3f\n", cat.c_str(), s.episodes, s.sr, s.spl);
      }
      std::printf("summary: %s\n", (fs::path(out_dir) / "summary.json").string().c_str());
    } else if (*spl) {
      const auto results = load_results(results_file);
      const BenchmarkSummary s = summarize(results);
      nlohmann::json j = summary_to_json(s);
      j.erase("artifacts");
      std::cout << j.dump(2) << '\n';
    } else if (*snap) {
      const auto path = snapshot_from_artifacts(
          episode_artifact, snapshot_out.empty() ? std::nullopt : std::optional<fs::path>(snapshot_out));
      std::printf("%s\n", path.string().c_str());
    } else if (*gen) {
      const auto eps = write_suite(gen_out, gen_count, gen_seed);
      std::printf("%zu episodes in %s\n", eps.size(), (fs::path(gen_out) / "suite.json").string().c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
