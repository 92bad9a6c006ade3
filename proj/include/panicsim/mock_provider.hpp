#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/gateway.hpp"

namespace panicsim {

struct ScriptedTurn {
  std::string content;    // reply text, or refusal message when refused
  bool refused = false;
  double latency_ms = 0;  // simulated; the mock sleeps this long
};

/// Replies keyed by (session tag, turn index).
///
/// File format (JSON):
///   {"turns": [{"session": "u01", "turn": 0, "reply": "Data understood."},
///              {"session": "u02", "turn": 0, "refusal": "content policy"}, ...]}
/// A transcript log (JSONL) is also accepted; see MockScript::from_transcript.
class MockScript {
 public:
  void set_reply(const std::string& session, std::size_t turn, std::string reply,
                 double latency_ms = 0);
  void set_refusal(const std::string& session, std::size_t turn, std::string message = "refused");

  const ScriptedTurn* find(const std::string& session, std::size_t turn) const;
  std::size_t size() const { return turns_.size(); }

  nlohmann::json to_json() const;
  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
  static MockScript from_transcript(const std::vector<TranscriptRecord>& records);

 private:
  std::map<std::pair<std::string, std::size_t>, ScriptedTurn> turns_;
};

/// Deterministic offline provider. Records every request and the peak number
/// of concurrently executing calls.
class MockProvider : public ChatProvider {
 public:
  explicit MockProvider(MockScript script) : script_(std::move(script)) {}

  ChatReply complete(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }

  std::vector<ChatRequest> requests() const;
  std::size_t call_count() const;
  int peak_in_flight() const { return peak_in_flight_.load(); }

 private:
  MockScript script_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
};

}  // namespace panicsim
