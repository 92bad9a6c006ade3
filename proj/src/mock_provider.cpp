#include "panicsim/mock_provider.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"

namespace panicsim {

using json = nlohmann::json;

void MockScript::set_reply(const std::string& session, std::size_t turn, std::string reply,
                           double latency_ms) {
  turns_[{session, turn}] = ScriptedTurn{std::move(reply), false, latency_ms};
}

void MockScript::set_refusal(const std::string& session, std::size_t turn, std::string message) {
  turns_[{session, turn}] = ScriptedTurn{std::move(message), true, 0};
}

const ScriptedTurn* MockScript::find(const std::string& session, std::size_t turn) const {
  auto it = turns_.find({session, turn});
  return it == turns_.end() ? nullptr : &it->second;
}

json MockScript::to_json() const {
  json turns = json::array();
  for (const auto& [key, entry] : turns_) {
    json t = {{"session", key.first}, {"turn", key.second}};
    t[entry.refused ? "refusal" : "reply"] = entry.content;
    if (entry.latency_ms > 0) t["latency_ms"] = entry.latency_ms;
    turns.push_back(std::move(t));
  }
  return json{{"turns", std::move(turns)}};
}

MockScript MockScript::from_json(const json& j) {
  MockScript script;
  for (const auto& t : j.at("turns")) {
    const auto session = t.at("session").get<std::string>();
    const auto turn = t.at("turn").get<std::size_t>();
    if (t.contains("refusal")) {
      script.set_refusal(session, turn, t["refusal"].get<std::string>());
    } else {
      script.set_reply(session, turn, t.at("reply").get<std::string>(), t.value("latency_ms", 0.0));
    }
  }
  return script;
}

MockScript MockScript::from_transcript(const std::vector<TranscriptRecord>& records) {
  MockScript script;
  for (const auto& r : records) {
    if (r.refused) {
      script.set_refusal(r.session_tag, r.turn, r.reply);
    } else {
      script.set_reply(r.session_tag, r.turn, r.reply);
    }
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") {
    std::vector<TranscriptRecord> records;
    for (const auto& row : read_jsonl(path)) records.push_back(transcript_from_json(row));
    return from_transcript(records);
  }
  return from_json(read_json_file(path));
}

ChatReply MockProvider::complete(const ChatRequest& request) {
  const int now = ++in_flight_;
  int peak = peak_in_flight_.load();
  while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<int>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
  }
  const ScriptedTurn* entry = script_.find(request.session_tag, request.turn);
  if (!entry) {
    throw UnscriptedTurn("mock script has no entry for session '" + request.session_tag +
                         "' turn " + std::to_string(request.turn));
  }
  if (entry->latency_ms > 0) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(entry->latency_ms));
  }
  if (entry->refused) throw ProviderRefusal(entry->content);

  ChatReply reply;
  reply.content = entry->content;
  reply.latency_ms = entry->latency_ms;
  return reply;
}

std::vector<ChatRequest> MockProvider::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t MockProvider::call_count() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

}  // namespace panicsim
