#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "wmnav/vlm.hpp"

namespace wmnav {

struct HttpBackendConfig {
  /// Base of an OpenAI-style API, e.g. "https://api.example.com/v1"; requests go to
  /// <base_url>/chat/completions.
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "gpt-4o";
  /// Name of the environment variable holding the API key (may be unset for local servers).
  std::string api_key_env = "WMNAV_API_KEY";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  /// Minimum spacing between requests across all callers of this backend.
  std::chrono::milliseconds min_interval{0};
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
  /// JSON-lines request/response log; API keys are redacted and image payloads elided.
  std::optional<std::filesystem::path> log_path;
};

/// Chat-completion client sending the prompt text and PNG attachments.
class HttpBackend : public VlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::string complete(const PromptBundle& prompt) override;

  /// Request body for a prompt (exposed for tests and logging).
  std::string request_body(const PromptBundle& prompt) const;

 private:
  void log_exchange(const PromptBundle& prompt, const std::string& body, int status, const std::string& response);
  void pace();

  HttpBackendConfig config_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::mutex pace_mutex_;
  std::chrono::steady_clock::time_point last_request_{};
  std::mutex log_mutex_;
  std::unique_ptr<std::ofstream> log_;
};

/// Pulls `choices[0].message.content` out of a chat-completion response.
std::string extract_completion_text(const std::string& response_body);

}  // namespace wmnav
