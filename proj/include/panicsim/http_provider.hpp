#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "panicsim/gateway.hpp"

namespace panicsim {

struct RetryPolicy {
  int max_retries = 3;          // retries after the first attempt
  double backoff_ms = 500;      // first delay; doubles per retry
  double max_backoff_ms = 30000;
};

struct ProviderConfig {
  std::string endpoint;  // full URL of the chat-completions route
  std::string token_env = "OPENAI_API_KEY";  // empty: send no Authorization header
  std::string model_id;
  double timeout_s = 120;
  int max_in_flight = 4;
  RetryPolicy retry;
  /// Body field that carries GenerationParams::repetition_penalty.
  std::string penalty_field = "frequency_penalty";

  void validate() const;
};

void to_json(nlohmann::json& j, const ProviderConfig& c);
void from_json(const nlohmann::json& j, ProviderConfig& c);

struct UrlParts {
  std::string scheme_host_port;  // e.g. "https://api.example.com:443"
  std::string path;              // e.g. "/v1/chat/completions"
};

UrlParts split_url(const std::string& url);

struct HttpResult {
  int status = 0;  // 0 when the transport failed before a response
  std::string body;
  std::string error;
  std::optional<double> retry_after_s;
};

/// POST with a JSON body; never throws for HTTP-level failures.
HttpResult http_post_json(const std::string& url, const std::string& body,
                          const std::string& bearer_token, double timeout_s);

/// OpenAI-compatible chat-completions request body.
nlohmann::ordered_json build_chat_request_body(const ChatRequest& request,
                                               const ProviderConfig& config);

/// Extracts choices[0].message.content. Throws ProviderRefusal on a
/// content-filter finish reason and ProtocolError on a malformed payload.
ChatReply parse_chat_response_body(const std::string& body);

class HttpProvider : public ChatProvider {
 public:
  using Poster = std::function<HttpResult(const std::string& url, const std::string& body)>;

  /// Reads the auth token from config.token_env; throws ConfigError when the
  /// variable is named but unset.
  explicit HttpProvider(ProviderConfig config);
  /// Test seam: route requests through a custom poster.
  HttpProvider(ProviderConfig config, Poster poster);

  ChatReply complete(const ChatRequest& request) override;
  std::string name() const override { return "http:" + config_.endpoint; }

 private:
  ProviderConfig config_;
  std::string token_;
  Poster poster_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace panicsim
