#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/errors.hpp"

namespace panicsim {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  static ChatMessage system(std::string content) { return {Role::System, std::move(content)}; }
  static ChatMessage user(std::string content) { return {Role::User, std::move(content)}; }
  static ChatMessage assistant(std::string content) { return {Role::Assistant, std::move(content)}; }
};

struct GenerationParams {
  double temperature = 0.4;
  std::optional<double> repetition_penalty;
  int max_tokens = 1024;
  std::string model_id;

  /// Throws ConfigError unless 0 <= temperature <= 2 and max_tokens > 0.
  void validate() const;
};

/// One call as seen by a provider.
struct ChatRequest {
  std::string session_tag;
  std::size_t turn = 0;  // 0-based index of this call within its session
  std::vector<ChatMessage> messages;
  GenerationParams params;
};

struct ChatReply {
  std::string content;
  double latency_ms = 0.0;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

/// Chat-completion backend. Implementations are shareable across threads.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatReply complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// One line of the transcript log; replayable as a mock script entry.
struct TranscriptRecord {
  std::string session_tag;
  std::size_t turn = 0;
  std::string request_hash;
  GenerationParams params;
  std::string prompt;
  std::string reply;
  bool refused = false;
  double latency_ms = 0.0;
};

nlohmann::json to_json(const TranscriptRecord& record);
TranscriptRecord transcript_from_json(const nlohmann::json& j);

/// Stable FNV-1a hash over session tag, turn, params and every message.
std::string request_hash(const ChatRequest& request);

/// Thread-safe in-memory transcript sink.
class Transcript {
 public:
  void append(TranscriptRecord record);
  std::vector<TranscriptRecord> records() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptRecord> records_;
};

/// Strictly ordered conversation with one provider. After a refusal the
/// session is dead and every further call throws ProviderRefusal.
class AgentSession {
 public:
  AgentSession(std::string tag, std::shared_ptr<ChatProvider> provider,
               std::shared_ptr<Transcript> transcript = nullptr,
               std::vector<ChatMessage> system_messages = {});

  /// Sends history + prompt and appends both prompt and reply on success.
  std::string complete(const ChatMessage& prompt, const GenerationParams& params);

  const std::string& tag() const { return tag_; }
  const std::vector<ChatMessage>& history() const { return history_; }
  std::size_t turns() const { return turns_; }
  bool dead() const { return dead_; }
  std::uint64_t prompt_tokens() const { return prompt_tokens_; }
  std::uint64_t completion_tokens() const { return completion_tokens_; }

 private:
  std::string tag_;
  std::shared_ptr<ChatProvider> provider_;
  std::shared_ptr<Transcript> transcript_;
  std::vector<ChatMessage> history_;
  std::size_t turns_ = 0;
  bool dead_ = false;
  std::uint64_t prompt_tokens_ = 0;
  std::uint64_t completion_tokens_ = 0;
};

/// Provider plus transcript sink plus call parameters, passed to feature
/// extractors and labelers that open their own sessions.
struct LlmHandle {
  std::shared_ptr<ChatProvider> provider;
  std::shared_ptr<Transcript> transcript;
  GenerationParams params;

  AgentSession session(std::string tag) const { return AgentSession(std::move(tag), provider, transcript); }
};

/// Sends prompt and parses the reply; on a ParseError sends the re-prompt
/// (up to `reprompts` times) and parses again. The last ParseError escapes.
template <typename Parse>
auto ask_parsed(AgentSession& session, const std::string& prompt, const std::string& reprompt,
                const GenerationParams& params, Parse parse, int reprompts = 1) -> decltype(parse(std::string{})) {
  std::string reply = session.complete(ChatMessage::user(prompt), params);
  for (int attempt = 0;; ++attempt) {
    try {
      return parse(reply);
    } catch (const ParseError&) {
      if (attempt >= reprompts) throw;
    }
    reply = session.complete(ChatMessage::user(reprompt), params);
  }
}

/// Caps the number of concurrent calls into the wrapped provider.
class GatedProvider : public ChatProvider {
 public:
  GatedProvider(std::shared_ptr<ChatProvider> inner, std::ptrdiff_t max_in_flight);

  ChatReply complete(const ChatRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace panicsim
