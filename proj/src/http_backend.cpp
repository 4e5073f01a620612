#include "wmnav/http_backend.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace wmnav {

namespace {

std::string base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), int(bytes.size()));
  out.resize(std::size_t(n));
  return out;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw ContractViolation("HttpBackend: base_url must look like http(s)://host[:port][/path]");
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : "";
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  if (config_.log_path) {
    log_ = std::make_unique<std::ofstream>(*config_.log_path, std::ios::app);
    if (!*log_) throw std::runtime_error("cannot open VLM log " + config_.log_path->string());
  }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const PromptBundle& prompt) const {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt.text}});
  for (const auto& img : prompt.images) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64(encode_png(img.raster))}}}});
  }
  nlohmann::json body{{"model", config_.model},
                      {"temperature", config_.temperature},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
  if (config_.seed) body["seed"] = *config_.seed;
  return body.dump();
}

void HttpBackend::pace() {
  if (config_.min_interval.count() <= 0) return;
  std::lock_guard lock(pace_mutex_);
  const auto now = std::chrono::steady_clock::now();
  const auto ready = last_request_ + config_.min_interval;
  if (now < ready) std::this_thread::sleep_for(ready - now);
  last_request_ = std::chrono::steady_clock::now();
}

void HttpBackend::log_exchange(const PromptBundle& prompt, const std::string& body, int status,
                               const std::string& response) {
  if (!log_) return;
  static const std::regex data_url(R"(data:image/png;base64,[A-Za-z0-9+/=]+)");
  std::string redacted = std::regex_replace(body, data_url, "data:image/png;base64,<elided>");
  if (!api_key_.empty()) {
    for (std::size_t pos; (pos = redacted.find(api_key_)) != std::string::npos;) {
      redacted.replace(pos, api_key_.size(), "<redacted>");
    }
  }
  nlohmann::json line{{"role", to_string(prompt.role)},
                      {"url", scheme_host_port_ + path_prefix_ + "/chat/completions"},
                      {"authorization", api_key_.empty() ? "none" : "Bearer <redacted>"},
                      {"request", nlohmann::json::parse(redacted, nullptr, false)},
                      {"status", status},
                      {"response", response}};
  std::lock_guard lock(log_mutex_);
  *log_ << line.dump() << '\n';
  log_->flush();
}

std::string HttpBackend::complete(const PromptBundle& prompt) {
  const std::string body = request_body(prompt);
  const std::string path = path_prefix_ + "/chat/completions";
  httplib::Client client(scheme_host_port_);
  const auto ms = config_.timeout.count();
  client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    pace();
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport error: " + httplib::to_string(res.error());
      log_exchange(prompt, body, 0, last_error);
      continue;
    }
    log_exchange(prompt, body, res->status, res->body);
    if (res->status >= 200 && res->status < 300) {
      try {
        return extract_completion_text(res->body);
      } catch (const std::exception& e) {
        throw BackendError(res->status, std::string("malformed chat-completion response: ") + e.what());
      }
    }
    last_status = res->status;
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (!retryable_status(res->status)) break;
  }
  if (last_status == 0) throw BackendUnavailable("VLM endpoint unavailable after retries (" + last_error + ")");
  throw BackendError(last_status, last_error);
}

std::string extract_completion_text(const std::string& response_body) {
  const auto doc = nlohmann::json::parse(response_body);
  const auto& content = doc.at("choices").at(0).at("message").at("content");
  if (content.is_string()) return content.get<std::string>();
  // Some servers return a list of content parts.
  std::string text;
  for (const auto& part : content) {
    if (part.value("type", "") == "text") text += part.value("text", "");
  }
  return text;
}

}  // namespace wmnav
