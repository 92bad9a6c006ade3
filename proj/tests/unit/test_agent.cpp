#include <cstdlib>

#include <gtest/gtest.h>

#include "panicsim/agent.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/mock_provider.hpp"
#include "support.hpp"

using namespace panicsim;

namespace {

AgentAssets load_assets() {
  AgentAssets a;
  a.knowledge = PsychKnowledge::load(testsupport::assets_dir() / "knowledge.md");
  a.items = load_ppdts_items(testsupport::assets_dir() / "ppdts.json");
  a.templates = TemplateSet::load(testsupport::assets_dir() / "templates");
  a.disaster = load_disaster_csv(testsupport::fixture_dir() / "disaster_context.csv");
  return a;
}

UserProfile sample_profile(const std::string& id = "u") {
  UserProfile p;
  p.user_id = id;
  p.personality.values = {0.61234, 0.48, 0.5, 0.55, 0.7189};
  p.sentiment.positive = 0.25;
  p.sentiment.neutral = 0.5;
  p.sentiment.negative = 0.25;
  p.themes.top_themes = {"Natural Disasters & Weather", "Society & News", "Sports & Entertainment", "Miscellaneous"};
  p.tone = ToneTriple{{"Casual", "Humorous", "Restless"}};
  p.risk_comm.follower_count = 120;
  p.risk_comm.followee_count = 300;
  p.risk_comm.posts_per_day = 1.234;
  p.risk_comm.distance_to_track_km = 42.17;
  p.relevant_posts = {"Heard the storm could turn toward the coast"};
  return p;
}

std::string answers(int n) {
  std::string out;
  for (int i = 1; i <= n; ++i) out += "Q" + std::to_string(i) + ": " + std::to_string(1 + i % 4) + " (reason " + std::to_string(i) + ")\n";
  return out;
}

const std::string kArousal =
    "Awareness: 4/5 (a)\nCoping: 3/5 (b)\nUncertainty: 3/5 (c)\nNovelty: 3/5 (d)\n[55%]";
const std::string kPass = "Psychological: YES (ok)\nLinguistic: YES (ok)\nFactual: YES (ok)\nPanic: YES (ok)";
const std::string kFail = "Psychological: YES (ok)\nLinguistic: NO (too formal)\nFactual: YES (ok)\nPanic: YES (ok)";

struct Harness {
  std::shared_ptr<MockProvider> mock;
  LlmHandle llm;

  explicit Harness(MockScript script)
      : mock(std::make_shared<MockProvider>(std::move(script))), llm{mock, std::make_shared<Transcript>(), {}} {}
};

}  // namespace

TEST(Agent, ToneBandsAndPercent) {
  EXPECT_EQ(tone_band(0.55), ToneBand::Panicked);
  EXPECT_EQ(tone_band(0.50), ToneBand::Neutral);
  EXPECT_EQ(tone_band(0.30), ToneBand::Calm);
  EXPECT_EQ(tone_band(0.51), ToneBand::Neutral);
  EXPECT_EQ(tone_band(0.49), ToneBand::Neutral);
  EXPECT_EQ(format_percent(0.55), "55");
  EXPECT_EQ(format_percent(0.5625), "56.25");
  EXPECT_EQ(format_percent(1.0), "100");
}

TEST(Agent, AssetsAreComplete) {
  const auto a = load_assets();
  EXPECT_EQ(a.knowledge.sections.size(), 6u);
  ASSERT_EQ(a.items.size(), 18u);
  EXPECT_EQ(a.items[9].subscale, "KA");
  EXPECT_EQ(a.items[10].subscale, "AAM");
  EXPECT_THROW(PsychKnowledge::parse("## One\ntext\n"), DataError);
}

TEST(Agent, Stage1GoldenPrompt) {
  const auto a = load_assets();
  const auto prompt = render_stage1(a.knowledge, a.disaster, sample_profile(), a.templates);
  const auto golden = testsupport::golden_dir() / "stage1_prompt.txt";
  if (std::getenv("PANICSIM_UPDATE_GOLDEN")) write_text_file(golden, prompt);
  EXPECT_EQ(prompt, read_text_file(golden));
  EXPECT_EQ(template_placeholders(prompt).size(), 0u);
}

TEST(Agent, Stage1Rules) {
  auto a = load_assets();
  auto p = sample_profile();
  p.tone.reset();
  const auto prompt = render_stage1(a.knowledge, a.disaster, p, a.templates);
  EXPECT_NE(prompt.find("\"tone\": \"unavailable\""), std::string::npos);
  EXPECT_NE(prompt.find("0.612"), std::string::npos);
  EXPECT_NE(prompt.find("| "), std::string::npos);

  a.disaster.rows.clear();
  EXPECT_THROW(render_stage1(a.knowledge, a.disaster, p, a.templates), DataError);
  TemplateSet broken = a.templates;
  broken.set("stage1_perception", "{psychology} {unknown_slot}");
  EXPECT_THROW(render_stage1(a.knowledge, load_assets().disaster, p, broken), TemplateError);
}

TEST(Agent, GenerationPromptBands) {
  const auto a = load_assets();
  const auto hot = render_generation(0.8, 1, a.templates);
  const auto cold = render_generation(0.2, 1, a.templates);
  const auto mid = render_generation(0.5, 3, a.templates);
  EXPECT_NE(hot.find(">51%"), std::string::npos);
  EXPECT_EQ(hot.find("<49%"), std::string::npos);
  EXPECT_NE(cold.find("<49%"), std::string::npos);
  EXPECT_EQ(mid.find(">51%"), std::string::npos);
  EXPECT_EQ(mid.find("<49%"), std::string::npos);
  EXPECT_NE(mid.find("EXACTLY 3"), std::string::npos);
  EXPECT_NE(hot.find("80%"), std::string::npos);
}

TEST(Agent, HappyPath) {
  MockScript s;
  s.set_reply("u", 0, "Data understood.");
  s.set_reply("u", 1, answers(18));
  s.set_reply("u", 2, kArousal);
  s.set_reply("u", 3, "[Stay safe everyone! #Sandy]\n### End");
  s.set_reply("u/expert/1", 0, kPass);
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::Completed) << t.reason;
  EXPECT_EQ(t.attempts, 1);
  ASSERT_TRUE(t.panic.has_value());
  EXPECT_DOUBLE_EQ(t.panic->probability, 0.55);
  EXPECT_EQ(t.panic->source, ProbabilitySource::LlmReported);
  ASSERT_EQ(t.tweets.size(), 1u);
  EXPECT_TRUE(t.tweets[0].verified);
  EXPECT_EQ(t.tweets[0].hashtags, (std::vector<std::string>{"#Sandy"}));

  // temperatures per stage
  const auto reqs = h.mock->requests();
  ASSERT_EQ(reqs.size(), 5u);
  EXPECT_DOUBLE_EQ(reqs[1].params.temperature, 0.4);
  EXPECT_DOUBLE_EQ(reqs[3].params.temperature, 0.7);
  EXPECT_EQ(reqs[3].params.repetition_penalty, 0.4);
  EXPECT_DOUBLE_EQ(reqs[4].params.temperature, 0.4);
  EXPECT_EQ(reqs[3].messages.size(), 7u);

  const auto restored = trace_from_json(to_json(t));
  EXPECT_EQ(to_json(restored), to_json(t));
}

TEST(Agent, InvalidQuestionnaireStopsEarly) {
  MockScript s;
  s.set_reply("u", 0, "ok");
  s.set_reply("u", 1, answers(17));
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::InvalidQuestionnaire);
  EXPECT_EQ(h.mock->call_count(), 2u);
  EXPECT_FALSE(t.predictable());
}

TEST(Agent, RefusalAtStage1) {
  MockScript s;
  s.set_refusal("u", 0, "content policy");
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::ProviderRefused);
  EXPECT_EQ(h.mock->call_count(), 1u);
}

TEST(Agent, FallbackProbabilityWhenNotReported) {
  MockScript s;
  s.set_reply("u", 0, "ok");
  s.set_reply("u", 1, answers(18));
  s.set_reply("u", 2, "Awareness: 4/5 (a)\nCoping: 3/5 (b)\nUncertainty: 3/5 (c)\nNovelty: 3/5 (d)");
  s.set_reply("u", 3, "[calm #x] ### End");
  s.set_reply("u/expert/1", 0, kPass);
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  ASSERT_EQ(t.outcome, Outcome::Completed) << t.reason;
  EXPECT_EQ(t.panic->probability, 0.5625);
  EXPECT_EQ(t.panic->source, ProbabilitySource::FallbackFormula);
}

TEST(Agent, ArousalRepromptThenFailure) {
  MockScript s;
  s.set_reply("u", 0, "ok");
  s.set_reply("u", 1, answers(18));
  s.set_reply("u", 2, "I feel fine");
  s.set_reply("u", 3, "still no scores");
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::Failed);
  EXPECT_EQ(h.mock->call_count(), 4u);
}

TEST(Agent, RetryWithFeedbackThenPass) {
  MockScript s;
  s.set_reply("u", 0, "ok");
  s.set_reply("u", 1, answers(18));
  s.set_reply("u", 2, kArousal);
  for (int i = 0; i < 3; ++i) s.set_reply("u", 3 + static_cast<std::size_t>(i), "[try " + std::to_string(i + 1) + "] ### End");
  s.set_reply("u/expert/1", 0, kFail);
  s.set_reply("u/expert/2", 0, "unparseable");
  s.set_reply("u/expert/3", 0, kPass);
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::Completed);
  EXPECT_EQ(t.attempts, 3);
  EXPECT_EQ(t.retries(), 2);
  ASSERT_EQ(t.verdict_history.size(), 3u);
  EXPECT_FALSE(t.verdict_history[1].has_value());
  EXPECT_EQ(t.tweets[0].text, "try 3");

  // the second generation prompt carries the failing expert's reason
  const auto reqs = h.mock->requests();
  bool found = false;
  for (const auto& r : reqs)
    if (r.session_tag == "u" && r.turn == 4) found = r.messages.back().content.find("too formal") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Agent, AllAttemptsFailIsUnverifiedAccepted) {
  MockScript s;
  s.set_reply("u", 0, "ok");
  s.set_reply("u", 1, answers(18));
  s.set_reply("u", 2, kArousal);
  for (std::size_t i = 0; i < 4; ++i) {
    s.set_reply("u", 3 + i, "[attempt " + std::to_string(i + 1) + "] ### End");
    s.set_reply("u/expert/" + std::to_string(i + 1), 0, kFail);
  }
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::UnverifiedAccepted);
  EXPECT_EQ(t.attempts, 4);
  EXPECT_FALSE(t.tweets[0].verified);
  EXPECT_EQ(t.tweets[0].text, "attempt 4");
  EXPECT_TRUE(t.predictable());
}

TEST(Agent, RefusalMidLoop) {
  MockScript s;
  s.set_reply("u", 0, "ok");
  s.set_reply("u", 1, answers(18));
  s.set_reply("u", 2, kArousal);
  s.set_reply("u", 3, "[a] ### End");
  s.set_reply("u/expert/1", 0, kFail);
  s.set_refusal("u", 4, "no");
  Harness h(s);
  const auto t = run_user_pipeline(sample_profile(), load_assets(), h.llm, AgentConfig{});
  EXPECT_EQ(t.outcome, Outcome::ProviderRefused);
}
