#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "wmnav/vlm.hpp"

namespace wmnav {

/// Append-only JSON-lines writer of {role, prompt_hash, response}; safe to share.
class ReplayRecorder {
 public:
  explicit ReplayRecorder(const std::filesystem::path& path);
  void append(VlmRole role, const std::string& prompt_hash, const std::string& response);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

/// Forwards to `inner` and records every exchange.
class RecordingBackend : public VlmBackend {
 public:
  RecordingBackend(std::shared_ptr<VlmBackend> inner, std::shared_ptr<ReplayRecorder> recorder);
  std::string complete(const PromptBundle& prompt) override;

 private:
  std::shared_ptr<VlmBackend> inner_;
  std::shared_ptr<ReplayRecorder> recorder_;
};

/// Serves recorded responses keyed by (role, prompt hash). Repeated keys are served
/// in recording order; once a key's responses are used up the last one repeats.
/// Unknown prompts raise BackendError(404).
class ReplayBackend : public VlmBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path);
  std::string complete(const PromptBundle& prompt) override;
  std::size_t size() const { return entries_; }

 private:
  struct Responses {
    std::vector<std::string> items;
    std::size_t next = 0;
  };
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, Responses> table_;
  std::size_t entries_ = 0;
};

}  // namespace wmnav
