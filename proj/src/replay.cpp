#include "wmnav/replay.hpp"

#include <nlohmann/json.hpp>

#include "wmnav/simulator.hpp"

namespace wmnav {

ReplayRecorder::ReplayRecorder(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open replay file " + path.string());
}

void ReplayRecorder::append(VlmRole role, const std::string& prompt_hash, const std::string& response) {
  const std::string line =
      nlohmann::json{{"role", to_string(role)}, {"prompt_hash", prompt_hash}, {"response", response}}.dump();
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

RecordingBackend::RecordingBackend(std::shared_ptr<VlmBackend> inner, std::shared_ptr<ReplayRecorder> recorder)
    : inner_(std::move(inner)), recorder_(std::move(recorder)) {}

std::string RecordingBackend::complete(const PromptBundle& prompt) {
  std::string response = inner_->complete(prompt);
  recorder_->append(prompt.role, prompt_hash(prompt), response);
  return response;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path.string() + ": cannot open replay file");
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto doc = nlohmann::json::parse(line, nullptr, false);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (doc.is_discarded() || !doc.is_object()) throw InvalidInput(where + ": malformed JSON line");
    for (const char* key : {"role", "prompt_hash", "response"}) {
      if (!doc.contains(key) || !doc[key].is_string()) {
        throw InvalidInput(where + ": field '" + key + "': missing or not a string");
      }
    }
    table_[{doc["role"].get<std::string>(), doc["prompt_hash"].get<std::string>()}].items.push_back(
        doc["response"].get<std::string>());
    ++entries_;
  }
}

std::string ReplayBackend::complete(const PromptBundle& prompt) {
  const std::pair<std::string, std::string> key{std::string(to_string(prompt.role)), prompt_hash(prompt)};
  std::lock_guard lock(mutex_);
  auto it = table_.find(key);
  if (it == table_.end()) {
    throw BackendError(404, "replay: no recorded " + key.first + " response for prompt " + key.second);
  }
  Responses& r = it->second;
  const std::string& out = r.items[std::min(r.next, r.items.size() - 1)];
  if (r.next < r.items.size()) ++r.next;
  return out;
}

}  // namespace wmnav
