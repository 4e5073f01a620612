#include "wmnav/vlm.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "embedded_prompts.hpp"

namespace wmnav {

std::string_view to_string(VlmRole role) {
  switch (role) {
    case VlmRole::Predict: return "predict";
    case VlmRole::Plan: return "plan";
    case VlmRole::Reason: return "reason";
  }
  return "?";
}

std::string_view to_string(Stage stage) {
  return stage == Stage::Exploration ? "exploration" : "goal_approach";
}

VlmRole role_from_string(std::string_view s) {
  if (s == "predict") return VlmRole::Predict;
  if (s == "plan") return VlmRole::Plan;
  if (s == "reason") return VlmRole::Reason;
  throw std::invalid_argument("unknown VLM role '" + std::string(s) + "'");
}

Cost Cost::initial(const std::string& goal_category) { return {"explore to find the " + goal_category, false}; }

// ---------------------------------------------------------------------------
// Templates

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.texts_["predict"] = std::string(prompts::k_predict);
  t.texts_["plan"] = std::string(prompts::k_plan);
  t.texts_["reason_explore"] = std::string(prompts::k_reason_explore);
  t.texts_["reason_goal"] = std::string(prompts::k_reason_goal);
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t = defaults();
  for (const char* name : {"predict", "plan", "reason_explore", "reason_goal"}) {
    const auto path = dir / (std::string(name) + ".txt");
    std::ifstream f(path);
    if (!f) continue;
    std::ostringstream ss;
    ss << f.rdbuf();
    t.texts_[name] = ss.str();
  }
  return t;
}

const std::string& PromptTemplates::get(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw std::out_of_range("no prompt template named '" + name + "'");
  return it->second;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::array<std::string, kViewCount> view_labels() {
  std::array<std::string, kViewCount> out;
  for (std::size_t i = 0; i < kViewCount; ++i) out[i] = std::to_string(int(kViewCentersDeg[i]));
  return out;
}

namespace {

std::string joined_labels() {
  std::string s;
  for (const auto& l : view_labels()) s += (s.empty() ? "" : ", ") + l;
  return s;
}

std::string legend_or_default(const std::string& legend) {
  return legend.empty() ? "floor and walls are gray; objects have flat colors" : legend;
}

}  // namespace

PromptBundle build_predict_prompt(const PromptImage& panorama, const std::string& goal_category,
                                  const PromptTemplates& templates, const std::string& legend) {
  if (goal_category.empty()) throw ContractViolation("build_predict_prompt: empty goal category");
  if (panorama.view_poses.size() != kViewCount) {
    throw ContractViolation("build_predict_prompt: panorama must carry six labeled views");
  }
  PromptBundle b;
  b.role = VlmRole::Predict;
  b.text = fill_template(templates.get("predict"),
                         {{"goal", goal_category}, {"labels", joined_labels()}, {"legend", legend_or_default(legend)}});
  b.images = {panorama};
  return b;
}

PromptBundle build_plan_prompt(const PromptImage& view, const Cost& cost, const std::string& goal_category,
                               const std::string& selection_explanation, const PromptTemplates& templates,
                               const std::string& legend) {
  if (goal_category.empty()) throw ContractViolation("build_plan_prompt: empty goal category");
  if (view.view_poses.size() != 1) throw ContractViolation("build_plan_prompt: expected a single view image");
  const std::string prev = cost.prev_subtask.empty() ? Cost::initial(goal_category).prev_subtask : cost.prev_subtask;
  PromptBundle b;
  b.role = VlmRole::Plan;
  b.text = fill_template(templates.get("plan"), {{"goal", goal_category},
                                                 {"prev_subtask", prev},
                                                 {"explanation", selection_explanation},
                                                 {"legend", legend_or_default(legend)}});
  b.images = {view};
  return b;
}

PromptBundle build_reason_prompt(const PromptImage& annotated_view, const std::string& subtask, const Cost& cost,
                                 Stage stage, const std::string& goal_category, const PromptTemplates& templates,
                                 const std::string& legend) {
  if (goal_category.empty()) throw ContractViolation("build_reason_prompt: empty goal category");
  if (annotated_view.view_poses.size() != 1) throw ContractViolation("build_reason_prompt: expected a single view");
  if (annotated_view.markers.empty()) throw ContractViolation("build_reason_prompt: view carries no action markers");
  if (cost.goal_flag) stage = Stage::GoalApproach;
  const int n = int(annotated_view.markers.size());
  PromptBundle b;
  b.role = VlmRole::Reason;
  b.stage = stage;
  b.text = fill_template(templates.get(stage == Stage::Exploration ? "reason_explore" : "reason_goal"),
                         {{"goal", goal_category},
                          {"subtask", subtask},
                          {"goal_flag", cost.goal_flag ? "yes" : "no"},
                          {"num_actions", std::to_string(n)},
                          {"max_index", std::to_string(n - 1)},
                          {"legend", legend_or_default(legend)}});
  b.images = {annotated_view};
  return b;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::vector<long> all_integers(std::string_view raw) {
  static const std::regex int_re(R"(-?\d+)");
  std::vector<long> out;
  const std::string s(raw);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), int_re); it != std::sregex_iterator(); ++it) {
    try {
      out.push_back(std::stol(it->str()));
    } catch (const std::out_of_range&) {
      out.push_back(it->str()[0] == '-' ? -1000 : 1000);
    }
  }
  return out;
}

int clamp_score(long v) { return int(std::clamp<long>(v, 0, 10)); }

std::optional<nlohmann::json> embedded_json_object(std::string_view raw) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  auto doc = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  return doc;
}

std::optional<bool> as_flag(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<long>() != 0;
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (s == "true" || s == "yes") return true;
    if (s == "false" || s == "no") return false;
  }
  return std::nullopt;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c) && c != '"' && c != '\''; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

ParsedPrediction parse_prediction(std::string_view raw) {
  static const std::regex pair_re(R"((\d{1,3})\s*(?:°|deg(?:rees)?)?\s*[:=]\s*(-?\d+))", std::regex::icase);
  const auto labels = view_labels();
  const std::string s(raw);

  std::array<std::optional<long>, kViewCount> keyed{};
  for (auto it = std::sregex_iterator(s.begin(), s.end(), pair_re); it != std::sregex_iterator(); ++it) {
    const auto label = (*it)[1].str();
    auto pos = std::find(labels.begin(), labels.end(), label);
    if (pos == labels.end()) continue;
    auto& slot = keyed[std::size_t(pos - labels.begin())];
    if (!slot) slot = std::stol((*it)[2].str());
  }
  ParsedPrediction out;
  if (std::all_of(keyed.begin(), keyed.end(), [](const auto& v) { return v.has_value(); })) {
    for (std::size_t i = 0; i < kViewCount; ++i) out.scores[i] = clamp_score(*keyed[i]);
    return out;
  }
  const auto ints = all_integers(raw);
  if (ints.size() != kViewCount) {
    throw ParseFailure("prediction: expected six scores, found " + std::to_string(ints.size()) + " integers");
  }
  for (std::size_t i = 0; i < kViewCount; ++i) out.scores[i] = clamp_score(ints[i]);
  return out;
}

ParsedPlan parse_plan(std::string_view raw) {
  if (auto doc = embedded_json_object(raw)) {
    auto sub = doc->find("subtask");
    auto flag = doc->find("goal_flag");
    if (sub != doc->end() && sub->is_string() && flag != doc->end()) {
      ParsedPlan plan;
      plan.subtask = trim(sub->get<std::string>());
      const auto f = as_flag(*flag);
      if (!plan.subtask.empty() && f) {
        plan.goal_flag = *f;
        if (auto ex = doc->find("explanation"); ex != doc->end() && ex->is_string()) plan.explanation = *ex;
        return plan;
      }
    }
  }
  static const std::regex sub_re(R"(subtask\s*[:=]\s*([^\n]+))", std::regex::icase);
  static const std::regex flag_re(R"(goal[ _]?flag\s*[:=]\s*"?(true|false|yes|no)\b)", std::regex::icase);
  static const std::regex expl_re(R"(explanation\s*[:=]\s*([^\n]+))", std::regex::icase);
  const std::string s(raw);
  std::smatch sm, fm, em;
  if (std::regex_search(s, sm, sub_re) && std::regex_search(s, fm, flag_re)) {
    ParsedPlan plan;
    plan.subtask = trim(sm[1].str());
    std::string f = fm[1].str();
    std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    plan.goal_flag = (f == "true" || f == "yes");
    if (std::regex_search(s, em, expl_re)) plan.explanation = trim(em[1].str());
    if (!plan.subtask.empty()) return plan;
  }
  throw ParseFailure("plan: no subtask/goal_flag pair found");
}

ParsedAction parse_action(std::string_view raw, int candidate_count) {
  std::optional<long> value;
  if (auto doc = embedded_json_object(raw)) {
    if (auto it = doc->find("action"); it != doc->end()) {
      if (it->is_number_integer()) value = it->get<long>();
      if (it->is_string()) {
        const auto ints = all_integers(it->get<std::string>());
        if (ints.size() == 1) value = ints[0];
      }
    }
  }
  if (!value) {
    static const std::regex action_re(R"(action[^0-9\-\n]{0,20}?(-?\d+))", std::regex::icase);
    const std::string s(raw);
    std::smatch m;
    if (std::regex_search(s, m, action_re)) value = std::stol(m[1].str());
  }
  if (!value) {
    const auto ints = all_integers(raw);
    if (ints.size() == 1) value = ints[0];
  }
  if (!value) throw ParseFailure("action: no action number found");
  if (*value < 0 || *value >= candidate_count) {
    throw ParseFailure("action: index " + std::to_string(*value) + " outside [0, " +
                       std::to_string(candidate_count) + ")");
  }
  return {int(*value)};
}

std::string format_prediction(const std::array<int, kViewCount>& scores) {
  const auto labels = view_labels();
  std::string out;
  for (std::size_t i = 0; i < kViewCount; ++i) {
    if (i) out += ' ';
    out += labels[i] + ":" + std::to_string(scores[i]);
  }
  return out;
}

std::string format_plan(const ParsedPlan& plan) {
  return nlohmann::json{{"subtask", plan.subtask}, {"goal_flag", plan.goal_flag}, {"explanation", plan.explanation}}
      .dump();
}

std::string format_action(int index) { return nlohmann::json{{"action", index}}.dump(); }

// ---------------------------------------------------------------------------
// Hashing

std::string prompt_hash(const PromptBundle& bundle) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  auto feed = [&](std::string_view s) {
    const std::uint64_t n = s.size();
    EVP_DigestUpdate(ctx, &n, sizeof n);
    EVP_DigestUpdate(ctx, s.data(), s.size());
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  feed(to_string(bundle.role));
  feed(to_string(bundle.stage));
  feed(bundle.text);
  for (const auto& img : bundle.images) {
    feed(img.label);
    feed(std::to_string(img.raster.width()) + "x" + std::to_string(img.raster.height()));
    const auto& px = img.raster.bytes();
    feed(std::string_view(reinterpret_cast<const char*>(px.data()), px.size()));
    for (const auto& p : img.view_poses) feed(num(p.x) + "," + num(p.y) + "," + num(p.z) + "," + num(p.yaw));
    for (const auto& m : img.markers) {
      feed(std::to_string(m.number) + ":" + num(m.action.r) + "," + num(m.action.theta) + "," + num(m.endpoint.x) +
           "," + num(m.endpoint.y));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Query helpers

namespace {

template <typename Parse>
auto query_parsed(VlmBackend& backend, const PromptBundle& prompt, int retries, Parse parse)
    -> std::optional<decltype(parse(std::string_view{}))> {
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const std::string raw = backend.complete(prompt);
    try {
      return parse(raw);
    } catch (const ParseFailure&) {
    }
  }
  return std::nullopt;
}

}  // namespace

ParsedPrediction query_prediction(VlmBackend& backend, const PromptBundle& prompt, int retries, bool* fell_back) {
  auto parsed = query_parsed(backend, prompt, retries, [](std::string_view r) { return parse_prediction(r); });
  if (fell_back) *fell_back = !parsed;
  if (parsed) return *parsed;
  ParsedPrediction uniform;
  uniform.scores.fill(5);
  return uniform;
}

ParsedPlan query_plan(VlmBackend& backend, const PromptBundle& prompt, const Cost& previous, int retries,
                      bool* fell_back) {
  auto parsed = query_parsed(backend, prompt, retries, [](std::string_view r) { return parse_plan(r); });
  if (fell_back) *fell_back = !parsed;
  if (parsed) return *parsed;
  return {previous.prev_subtask, previous.goal_flag, "planner response unparseable; keeping previous subtask"};
}

ParsedAction query_action(VlmBackend& backend, const PromptBundle& prompt, int candidate_count, int retries,
                          bool* fell_back) {
  auto parsed = query_parsed(backend, prompt, retries,
                             [candidate_count](std::string_view r) { return parse_action(r, candidate_count); });
  if (fell_back) *fell_back = !parsed;
  if (parsed) return *parsed;
  return {candidate_count / 2};
}

}  // namespace wmnav
