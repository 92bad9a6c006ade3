#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

// same configuration as the library so httplib's inline classes agree
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "panicsim/errors.hpp"
#include "panicsim/http_provider.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/mock_provider.hpp"
#include "panicsim/parsers.hpp"
#include "support.hpp"

using namespace panicsim;

namespace {

ChatRequest sample_request() {
  ChatRequest r;
  r.session_tag = "u01";
  r.turn = 3;
  r.messages = {ChatMessage::system("You are a careful simulator."), ChatMessage::user("Stage 4 prompt"),
                ChatMessage::assistant("[Stay safe #Sandy]\n### End"), ChatMessage::user("Regenerate \"quoted\"")};
  r.params = GenerationParams{0.7, 0.4, 512, ""};
  return r;
}

ProviderConfig stub_config(const std::string& endpoint) {
  ProviderConfig c;
  c.endpoint = endpoint;
  c.token_env = "";
  c.model_id = "sim-model";
  c.timeout_s = 5;
  c.retry.max_retries = 3;
  c.retry.backoff_ms = 0;
  return c;
}

const char* kOkBody = R"({"choices":[{"message":{"role":"assistant","content":"Data understood."},"finish_reason":"stop"}],
                          "usage":{"prompt_tokens":12,"completion_tokens":3}})";

}  // namespace

TEST(Session, HistoryAndScriptedBytes) {
  MockScript s;
  s.set_reply("a", 0, "first reply\n");
  s.set_reply("a", 1, "second");
  auto mock = std::make_shared<MockProvider>(s);
  auto transcript = std::make_shared<Transcript>();
  AgentSession session("a", mock, transcript);
  EXPECT_EQ(session.complete(ChatMessage::user("one"), {}), "first reply\n");
  EXPECT_EQ(session.complete(ChatMessage::user("two"), {}), "second");
  ASSERT_EQ(session.history().size(), 4u);
  EXPECT_EQ(session.history()[1].role, Role::Assistant);
  EXPECT_EQ(session.turns(), 2u);
  EXPECT_EQ(transcript->size(), 2u);
  EXPECT_EQ(mock->requests()[1].messages.size(), 3u);
  EXPECT_THROW(session.complete(ChatMessage::user("three"), {}), UnscriptedTurn);
}

TEST(Session, RefusalKillsSession) {
  MockScript s;
  s.set_refusal("a", 0, "policy");
  AgentSession session("a", std::make_shared<MockProvider>(s), nullptr);
  EXPECT_THROW(session.complete(ChatMessage::user("x"), {}), ProviderRefusal);
  EXPECT_TRUE(session.dead());
  EXPECT_THROW(session.complete(ChatMessage::user("y"), {}), ProviderRefusal);
}

TEST(Session, AskParsedReprompts) {
  MockScript s;
  s.set_reply("a", 0, "garbage");
  s.set_reply("a", 1, "[ok] ### End");
  AgentSession session("a", std::make_shared<MockProvider>(s), nullptr);
  auto tweets = ask_parsed(session, "go", "again", GenerationParams{},
                           [](const std::string& r) { return parse_tweets(r, 1); });
  EXPECT_EQ(tweets[0].text, "ok");
}

TEST(MockProvider, ScriptRoundTripAndReplay) {
  MockProvider empty{MockScript{}};
  EXPECT_EQ(empty.call_count(), 0u);

  MockScript s;
  s.set_reply("x", 0, "hello", 0);
  s.set_refusal("y", 0, "nope");
  const auto restored = MockScript::from_json(s.to_json());
  EXPECT_EQ(restored.to_json(), s.to_json());

  auto run = [&](const MockScript& script) {
    auto t = std::make_shared<Transcript>();
    AgentSession a("x", std::make_shared<MockProvider>(script), t);
    a.complete(ChatMessage::user("hi"), {});
    AgentSession b("y", std::make_shared<MockProvider>(script), t);
    EXPECT_THROW(b.complete(ChatMessage::user("hi"), {}), ProviderRefusal);
    std::string out;
    for (const auto& r : t->records()) out += to_json(r).dump() + "\n";
    return std::make_pair(out, t->records());
  };
  const auto [first, records] = run(s);
  EXPECT_EQ(run(s).first, first);
  // a transcript replays as a script
  EXPECT_EQ(run(MockScript::from_transcript(records)).first, first);
  EXPECT_TRUE(transcript_from_json(to_json(records[1])).refused);
}

TEST(MockProvider, GateCapsConcurrency) {
  MockScript s;
  for (int i = 0; i < 16; ++i) s.set_reply("s" + std::to_string(i), 0, "ok", 20);
  auto mock = std::make_shared<MockProvider>(s);
  auto gated = std::make_shared<GatedProvider>(mock, 3);
  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&, i] {
      AgentSession session("s" + std::to_string(i), gated, nullptr);
      session.complete(ChatMessage::user("go"), {});
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(mock->call_count(), 16u);
  EXPECT_LE(mock->peak_in_flight(), 3);
  EXPECT_GE(mock->peak_in_flight(), 1);
}

TEST(Gateway, RequestHashStable) {
  auto r = sample_request();
  const auto h = request_hash(r);
  EXPECT_EQ(request_hash(r), h);
  r.messages.back().content += " ";
  EXPECT_NE(request_hash(r), h);
  EXPECT_THROW((GenerationParams{3.0, std::nullopt, 10, ""}.validate()), ConfigError);
  EXPECT_THROW((GenerationParams{0.4, std::nullopt, 0, ""}.validate()), ConfigError);
}

TEST(HttpProvider, GoldenRequestBody) {
  const auto body = build_chat_request_body(sample_request(), stub_config("http://127.0.0.1/v1/chat/completions"));
  const auto golden = testsupport::golden_dir() / "chat_request.json";
  if (std::getenv("PANICSIM_UPDATE_GOLDEN")) write_text_file(golden, body.dump(2) + "\n");
  EXPECT_EQ(body.dump(2) + "\n", read_text_file(golden));
}

TEST(HttpProvider, ResponseParsing) {
  const auto reply = parse_chat_response_body(kOkBody);
  EXPECT_EQ(reply.content, "Data understood.");
  EXPECT_EQ(reply.prompt_tokens, 12u);
  EXPECT_THROW(parse_chat_response_body(R"({"choices":[{"message":{"content":""},"finish_reason":"content_filter"}]})"),
               ProviderRefusal);
  EXPECT_THROW(parse_chat_response_body("{}"), ProtocolError);
  EXPECT_THROW(parse_chat_response_body("not json"), ProtocolError);
}

TEST(HttpProvider, LocalStubServer) {
  httplib::Server server;
  std::string seen_body, seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    res.set_content(kOkBody, "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("PANICSIM_TEST_TOKEN", "secret-123", 1);
  auto config = stub_config("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
  config.token_env = "PANICSIM_TEST_TOKEN";
  HttpProvider provider(config);
  const auto reply = provider.complete(sample_request());
  server.stop();
  worker.join();

  EXPECT_EQ(reply.content, "Data understood.");
  EXPECT_EQ(seen_auth, "Bearer secret-123");
  EXPECT_EQ(nlohmann::ordered_json::parse(seen_body).dump(2) + "\n",
            read_text_file(testsupport::golden_dir() / "chat_request.json"));
}

TEST(HttpProvider, MissingTokenIsConfigError) {
  auto config = stub_config("http://127.0.0.1:1/v1/chat/completions");
  config.token_env = "PANICSIM_SURELY_UNSET_VARIABLE";
  ::unsetenv("PANICSIM_SURELY_UNSET_VARIABLE");
  EXPECT_THROW(HttpProvider{config}, ConfigError);
}

TEST(HttpProvider, RetriesThenTransportError) {
  int calls = 0;
  HttpProvider provider(stub_config("http://stub/v1"), [&](const std::string&, const std::string&) {
    ++calls;
    return HttpResult{503, "busy", "", std::nullopt};
  });
  try {
    provider.complete(sample_request());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 4u);
  }
  EXPECT_EQ(calls, 4);

  int flaky = 0;
  HttpProvider recovers(stub_config("http://stub/v1"), [&](const std::string&, const std::string&) {
    return ++flaky < 3 ? HttpResult{0, "", "connection reset", std::nullopt} : HttpResult{200, kOkBody, "", std::nullopt};
  });
  EXPECT_EQ(recovers.complete(sample_request()).content, "Data understood.");

  HttpProvider bad_request(stub_config("http://stub/v1"), [](const std::string&, const std::string&) {
    return HttpResult{400, "bad", "", std::nullopt};
  });
  EXPECT_THROW(bad_request.complete(sample_request()), ProtocolError);
}

TEST(HttpProvider, UrlSplitting) {
  const auto u = split_url("https://api.example.com/v1/chat/completions");
  EXPECT_EQ(u.scheme_host_port, "https://api.example.com");
  EXPECT_EQ(u.path, "/v1/chat/completions");
  EXPECT_THROW(split_url("api.example.com"), ConfigError);
}
