#include "panicsim/http_provider.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "panicsim/errors.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

void ProviderConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("provider endpoint is empty");
  if (max_in_flight < 1 || max_in_flight > 1024)
    throw ConfigError("provider max_in_flight must be within [1, 1024]");
  if (timeout_s <= 0) throw ConfigError("provider timeout must be positive");
  if (retry.max_retries < 0) throw ConfigError("retry count must be non-negative");
  if (retry.backoff_ms < 0) throw ConfigError("retry backoff must be non-negative");
  if (penalty_field != "frequency_penalty" && penalty_field != "repetition_penalty" &&
      penalty_field != "presence_penalty")
    throw ConfigError("penalty_field must be frequency_penalty, presence_penalty or repetition_penalty");
}

void to_json(json& j, const ProviderConfig& c) {
  j = json{{"endpoint", c.endpoint},
           {"token_env", c.token_env},
           {"model_id", c.model_id},
           {"timeout_s", c.timeout_s},
           {"max_in_flight", c.max_in_flight},
           {"retry", {{"max_retries", c.retry.max_retries},
                      {"backoff_ms", c.retry.backoff_ms},
                      {"max_backoff_ms", c.retry.max_backoff_ms}}},
           {"penalty_field", c.penalty_field}};
}

void from_json(const json& j, ProviderConfig& c) {
  c.endpoint = j.value("endpoint", c.endpoint);
  c.token_env = j.value("token_env", c.token_env);
  c.model_id = j.value("model_id", c.model_id);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    c.retry.max_retries = r.value("max_retries", c.retry.max_retries);
    c.retry.backoff_ms = r.value("backoff_ms", c.retry.backoff_ms);
    c.retry.max_backoff_ms = r.value("max_backoff_ms", c.retry.max_backoff_ms);
  }
  c.penalty_field = j.value("penalty_field", c.penalty_field);
}

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  parts.scheme_host_port = url.substr(0, path_start);
  parts.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return parts;
}

HttpResult http_post_json(const std::string& url, const std::string& body,
                          const std::string& bearer_token, double timeout_s) {
  HttpResult result;
  UrlParts parts;
  try {
    parts = split_url(url);
  } catch (const ConfigError& e) {
    result.error = e.what();
    return result;
  }
  httplib::Client client(parts.scheme_host_port);
  const auto seconds = static_cast<time_t>(timeout_s);
  const auto micros = static_cast<time_t>((timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto response = client.Post(parts.path, headers, body, "application/json");
  if (!response) {
    result.error = httplib::to_string(response.error());
    return result;
  }
  result.status = response->status;
  result.body = response->body;
  if (response->has_header("Retry-After")) {
    const std::string value = response->get_header_value("Retry-After");
    char* end = nullptr;
    const double seconds_value = std::strtod(value.c_str(), &end);
    if (end != value.c_str() && std::isfinite(seconds_value) && seconds_value >= 0)
      result.retry_after_s = seconds_value;
  }
  return result;
}

nlohmann::ordered_json build_chat_request_body(const ChatRequest& request,
                                               const ProviderConfig& config) {
  nlohmann::ordered_json body;
  body["model"] = request.params.model_id.empty() ? config.model_id : request.params.model_id;
  auto messages = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) {
    nlohmann::ordered_json msg;
    msg["role"] = std::string(to_string(m.role));
    msg["content"] = m.content;
    messages.push_back(std::move(msg));
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.params.temperature;
  body["max_tokens"] = request.params.max_tokens;
  if (request.params.repetition_penalty) {
    body[config.penalty_field] = *request.params.repetition_penalty;
  }
  return body;
}

namespace {

bool mentions_content_filter(const std::string& body) {
  const std::string lower = to_lower(body);
  return lower.find("content_filter") != std::string::npos ||
         lower.find("content_policy") != std::string::npos ||
         lower.find("data_inspection_failed") != std::string::npos;
}

}  // namespace

ChatReply parse_chat_response_body(const std::string& body) {
  json payload;
  try {
    payload = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("chat response is not JSON: ") + e.what());
  }
  if (!payload.is_object() || !payload.contains("choices") || !payload["choices"].is_array() ||
      payload["choices"].empty())
    throw ProtocolError("chat response lacks choices");
  const auto& choice = payload["choices"][0];
  if (choice.is_object() && choice.value("finish_reason", json()).is_string() &&
      choice["finish_reason"].get<std::string>() == "content_filter")
    throw ProviderRefusal("provider refused: content_filter");
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object() ||
      !choice["message"].contains("content") || !choice["message"]["content"].is_string())
    throw ProtocolError("chat response lacks choices[0].message.content");

  ChatReply reply;
  reply.content = choice["message"]["content"].get<std::string>();
  if (payload.contains("usage") && payload["usage"].is_object()) {
    const auto& usage = payload["usage"];
    reply.prompt_tokens = usage.value("prompt_tokens", std::uint64_t{0});
    reply.completion_tokens = usage.value("completion_tokens", std::uint64_t{0});
  }
  return reply;
}

HttpProvider::HttpProvider(ProviderConfig config)
    : HttpProvider(config, nullptr) {}

HttpProvider::HttpProvider(ProviderConfig config, Poster poster)
    : config_(std::move(config)), poster_(std::move(poster)), slots_(std::max(1, config_.max_in_flight)) {
  config_.validate();
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (!token || !*token)
      throw ConfigError("environment variable " + config_.token_env + " holding the provider token is not set");
    token_ = token;
  }
  if (!poster_) {
    poster_ = [this](const std::string& url, const std::string& body) {
      return http_post_json(url, body, token_, config_.timeout_s);
    };
  }
}

ChatReply HttpProvider::complete(const ChatRequest& request) {
  const std::string body = build_chat_request_body(request, config_).dump();

  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  const int attempts_allowed = config_.retry.max_retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    HttpResult result = poster_(config_.endpoint, body);
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

    if (result.status == 200) {
      ChatReply reply = parse_chat_response_body(result.body);
      reply.latency_ms = latency;
      return reply;
    }

    const bool retryable = result.status == 0 || result.status == 429 || result.status >= 500;
    if (!retryable) {
      if (mentions_content_filter(result.body))
        throw ProviderRefusal("provider refused (HTTP " + std::to_string(result.status) + ")");
      throw ProtocolError("HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 500));
    }
    last_error = result.status == 0 ? result.error : "HTTP " + std::to_string(result.status);
    if (attempt == attempts_allowed) break;

    double delay_ms = config_.retry.backoff_ms * std::pow(2.0, attempt - 1);
    if (result.retry_after_s) delay_ms = std::max(delay_ms, *result.retry_after_s * 1000.0);
    delay_ms = std::min(delay_ms, config_.retry.max_backoff_ms);
    if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
  }
  throw TransportError("chat completion failed: " + last_error,
                       static_cast<std::size_t>(attempts_allowed));
}

}  // namespace panicsim
