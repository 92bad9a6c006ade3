#include "panicsim/gateway.hpp"

#include <cstdio>

#include "panicsim/errors.hpp"
#include "panicsim/rng.hpp"

namespace panicsim {

using json = nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view text) {
  if (text == "system") return Role::System;
  if (text == "user") return Role::User;
  if (text == "assistant") return Role::Assistant;
  throw ProtocolError("unknown chat role '" + std::string(text) + "'");
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw ConfigError("temperature must be within [0, 2]");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

namespace {

json params_json(const GenerationParams& p) {
  json j = json::object();
  j["temperature"] = p.temperature;
  j["repetition_penalty"] = p.repetition_penalty ? json(*p.repetition_penalty) : json(nullptr);
  j["max_tokens"] = p.max_tokens;
  j["model_id"] = p.model_id;
  return j;
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.temperature = j.value("temperature", 0.4);
  if (j.contains("repetition_penalty") && !j["repetition_penalty"].is_null())
    p.repetition_penalty = j["repetition_penalty"].get<double>();
  p.max_tokens = j.value("max_tokens", 1024);
  p.model_id = j.value("model_id", std::string{});
  return p;
}

}  // namespace

std::string request_hash(const ChatRequest& request) {
  std::uint64_t h = fnv1a64(request.session_tag);
  h = fnv1a64("\x1f" + std::to_string(request.turn), h);
  h = fnv1a64("\x1f" + params_json(request.params).dump(), h);
  for (const auto& m : request.messages) {
    h = fnv1a64("\x1e", h);
    h = fnv1a64(to_string(m.role), h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(m.content, h);
  }
  return hex64(h);
}

json to_json(const TranscriptRecord& r) {
  json j = json::object();
  j["session"] = r.session_tag;
  j["turn"] = r.turn;
  j["request_hash"] = r.request_hash;
  j["params"] = params_json(r.params);
  j["prompt"] = r.prompt;
  if (r.refused) {
    j["refusal"] = r.reply;
  } else {
    j["reply"] = r.reply;
  }
  j["latency_ms"] = r.latency_ms;
  return j;
}

TranscriptRecord transcript_from_json(const json& j) {
  TranscriptRecord r;
  r.session_tag = j.at("session").get<std::string>();
  r.turn = j.at("turn").get<std::size_t>();
  r.request_hash = j.value("request_hash", std::string{});
  if (j.contains("params")) r.params = params_from_json(j["params"]);
  r.prompt = j.value("prompt", std::string{});
  if (j.contains("refusal")) {
    r.refused = true;
    r.reply = j["refusal"].get<std::string>();
  } else {
    r.reply = j.at("reply").get<std::string>();
  }
  r.latency_ms = j.value("latency_ms", 0.0);
  return r;
}

void Transcript::append(TranscriptRecord record) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(record));
}

std::vector<TranscriptRecord> Transcript::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

AgentSession::AgentSession(std::string tag, std::shared_ptr<ChatProvider> provider,
                           std::shared_ptr<Transcript> transcript,
                           std::vector<ChatMessage> system_messages)
    : tag_(std::move(tag)),
      provider_(std::move(provider)),
      transcript_(std::move(transcript)),
      history_(std::move(system_messages)) {
  if (!provider_) throw ConfigError("session '" + tag_ + "' has no provider");
  for (const auto& m : history_) {
    if (m.role != Role::System) throw ConfigError("initial session block must be system messages");
    if (m.content.empty()) throw ConfigError("system message content must be non-empty");
  }
}

std::string AgentSession::complete(const ChatMessage& prompt, const GenerationParams& params) {
  if (dead_) throw ProviderRefusal("session '" + tag_ + "' is dead after a refusal");
  if (prompt.role != Role::User) throw ConfigError("session prompts must use the user role");
  if (prompt.content.empty()) throw ConfigError("prompt content must be non-empty");
  params.validate();

  ChatRequest request;
  request.session_tag = tag_;
  request.turn = turns_;
  request.messages = history_;
  request.messages.push_back(prompt);
  request.params = params;

  TranscriptRecord record;
  record.session_tag = tag_;
  record.turn = turns_;
  record.request_hash = request_hash(request);
  record.params = params;
  record.prompt = prompt.content;

  ChatReply reply;
  try {
    reply = provider_->complete(request);
  } catch (const ProviderRefusal& refusal) {
    dead_ = true;
    record.refused = true;
    record.reply = refusal.what();
    if (transcript_) transcript_->append(std::move(record));
    throw;
  }

  history_.push_back(prompt);
  history_.push_back(ChatMessage::assistant(reply.content));
  ++turns_;
  prompt_tokens_ += reply.prompt_tokens;
  completion_tokens_ += reply.completion_tokens;

  record.reply = reply.content;
  record.latency_ms = reply.latency_ms;
  if (transcript_) transcript_->append(std::move(record));
  return reply.content;
}

GatedProvider::GatedProvider(std::shared_ptr<ChatProvider> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(max_in_flight) {
  if (max_in_flight < 1 || max_in_flight > 1024)
    throw ConfigError("max in-flight requests must be within [1, 1024]");
}

ChatReply GatedProvider::complete(const ChatRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->complete(request);
}

}  // namespace panicsim
