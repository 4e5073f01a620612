#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wmnav/geometry.hpp"
#include "wmnav/image.hpp"

namespace wmnav {

enum class VlmRole { Predict, Plan, Reason };
enum class Stage { Exploration, GoalApproach };

std::string_view to_string(VlmRole role);
std::string_view to_string(Stage stage);
VlmRole role_from_string(std::string_view s);

/// Planner feedback carried between steps: the last subtask and whether the goal
/// was detected.
struct Cost {
  std::string prev_subtask;
  bool goal_flag = false;

  static Cost initial(const std::string& goal_category);
  friend bool operator==(const Cost&, const Cost&) = default;
};

/// A numbered action drawn on an annotated view.
struct ActionMarker {
  int number = 0;
  PolarAction action;
  Vec2 endpoint;                      // world frame, where the agent ends up
  std::optional<Vec2> target;         // goal stage: ground point the marker stands on
  std::array<double, 2> pixel{};      // in the annotated raster
};

/// Image attachment plus the capture metadata it was rendered from.
struct PromptImage {
  std::string label;
  RgbImage raster;
  std::vector<Pose> view_poses;       // one per strip: six for a panorama, one for a view
  std::vector<ActionMarker> markers;  // annotated views only
};

struct PromptBundle {
  VlmRole role = VlmRole::Predict;
  Stage stage = Stage::Exploration;
  std::string text;
  std::vector<PromptImage> images;
};

struct ParsedPrediction {
  std::array<int, kViewCount> scores{};
};

struct ParsedPlan {
  std::string subtask;
  bool goal_flag = false;
  std::string explanation;
};

struct ParsedAction {
  int index = 0;
};

class ParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport failure (connection refused, timeout) after retries.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The endpoint answered with a non-success status.
class BackendError : public std::runtime_error {
 public:
  BackendError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Prompt wording, loaded from text files. Placeholders are written `{name}`.
class PromptTemplates {
 public:
  /// Built-in copies of the files shipped under prompts/.
  static PromptTemplates defaults();
  /// Reads predict.txt, plan.txt, reason_explore.txt and reason_goal.txt; files
  /// missing from `dir` keep their default text.
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  void set(const std::string& name, std::string text) { texts_[name] = std::move(text); }

 private:
  std::map<std::string, std::string> texts_;
};

/// Replaces every `{key}` with its value; unknown placeholders stay untouched.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Labels the six panorama strips carry: "30", "90", ... "330".
std::array<std::string, kViewCount> view_labels();

PromptBundle build_predict_prompt(const PromptImage& panorama, const std::string& goal_category,
                                  const PromptTemplates& templates = PromptTemplates::defaults(),
                                  const std::string& legend = "");
PromptBundle build_plan_prompt(const PromptImage& view, const Cost& cost, const std::string& goal_category,
                               const std::string& selection_explanation,
                               const PromptTemplates& templates = PromptTemplates::defaults(),
                               const std::string& legend = "");
/// A raised goal flag always selects the goal-approach wording.
PromptBundle build_reason_prompt(const PromptImage& annotated_view, const std::string& subtask, const Cost& cost,
                                 Stage stage, const std::string& goal_category,
                                 const PromptTemplates& templates = PromptTemplates::defaults(),
                                 const std::string& legend = "");

ParsedPrediction parse_prediction(std::string_view raw);
ParsedPlan parse_plan(std::string_view raw);
ParsedAction parse_action(std::string_view raw, int candidate_count);

std::string format_prediction(const std::array<int, kViewCount>& scores);
std::string format_plan(const ParsedPlan& plan);
std::string format_action(int index);

/// SHA-256 (hex) over role, stage, text and every image's pixels and metadata.
std::string prompt_hash(const PromptBundle& bundle);

class VlmBackend {
 public:
  virtual ~VlmBackend() = default;
  /// Raw model text for one prompt. Implementations must be safe to call from
  /// several episodes concurrently.
  virtual std::string complete(const PromptBundle& prompt) = 0;
};

// Query helpers: call the backend, parse, retry on ParseFailure up to `retries`
// more times, then fall back. Backend exceptions propagate.

/// Falls back to a uniform score of 5.
ParsedPrediction query_prediction(VlmBackend& backend, const PromptBundle& prompt, int retries = 3,
                                  bool* fell_back = nullptr);
/// Falls back to the previous cost's subtask and flag.
ParsedPlan query_plan(VlmBackend& backend, const PromptBundle& prompt, const Cost& previous, int retries = 3,
                      bool* fell_back = nullptr);
/// Falls back to the middle candidate.
ParsedAction query_action(VlmBackend& backend, const PromptBundle& prompt, int candidate_count, int retries = 3,
                          bool* fell_back = nullptr);

}  // namespace wmnav
