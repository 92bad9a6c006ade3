#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "panicsim/app.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"
#include "support.hpp"

using namespace panicsim;

namespace {

RunConfig fixture_config(const std::filesystem::path& out) {
  auto c = RunConfig::load(testsupport::fixture_dir() / "config.json");
  c.out_dir = out;
  return c;
}

// One full run shared by the tests below.
class FixtureRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testsupport::TempDir("panicsim-app");
    config_ = new RunConfig(fixture_config(dir_->path()));
    std::ostringstream log;
    ingest_ = run_ingest(*config_, log);
    profile_ = run_profile(*config_, log);
    simulate_ = run_simulate(*config_, false, log);
    report_ = new EvalReport(run_evaluate(*config_, log));
    annotate_ = run_annotate(*config_, false, log);
  }
  static void TearDownTestSuite() {
    delete report_;
    delete config_;
    delete dir_;
  }

  static inline testsupport::TempDir* dir_ = nullptr;
  static inline RunConfig* config_ = nullptr;
  static inline IngestStats ingest_;
  static inline ProfileStats profile_;
  static inline SimulateStats simulate_;
  static inline EvalReport* report_ = nullptr;
  static inline AnnotateStats annotate_;
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PANICSIM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAndValidation) {
  RunConfig c;
  EXPECT_DOUBLE_EQ(c.dedup_threshold, 0.85);
  EXPECT_EQ(c.lda.topics, 25);
  EXPECT_EQ(c.agent.max_retries, 3);
  EXPECT_DOUBLE_EQ(c.agent.analysis.temperature, 0.4);
  EXPECT_DOUBLE_EQ(c.agent.generation.temperature, 0.7);

  const auto j = nlohmann::json::parse(R"({"corpus": {"posts": "p.jsonl", "disaster_time": "2012-10-29T23:30Z"},
      "disaster_context": "d.csv", "assets_dir": "assets", "mock_script": "m.json", "lda": {"iterations": 100}})");
  const auto parsed = RunConfig::from_json(j, "/base");
  EXPECT_EQ(parsed.resolve(parsed.posts), std::filesystem::path("/base/p.jsonl"));
  EXPECT_EQ(parsed.lda.iterations, 100);
  const auto overrides = config_overrides(parsed);
  EXPECT_EQ(overrides["lda.iterations"]["default"], 500);
  EXPECT_EQ(overrides["lda.iterations"]["value"], 100);
  EXPECT_FALSE(overrides.contains("seed"));

  auto bad = j;
  bad["backends"] = {{"discriminator", "oracle"}};
  EXPECT_THROW(RunConfig::from_json(bad, "/base"), ConfigError);
  bad = j;
  bad["corpus"]["split_ratio"] = 1.5;
  EXPECT_THROW(RunConfig::from_json(bad, "/base"), ConfigError);
}

TEST(Config, ProviderRequiredWithoutMock) {
  auto c = fixture_config("/tmp/unused");
  c.mock_script.reset();
  EXPECT_THROW(make_provider(c), ConfigError);
}

TEST_F(FixtureRun, IngestCounts) {
  EXPECT_EQ(ingest_.users_retained, 25u);
  EXPECT_EQ(ingest_.train, 20u);
  EXPECT_EQ(ingest_.test, 5u);
  EXPECT_EQ(ingest_.malformed, 2u);
  EXPECT_GT(ingest_.duplicates, 0u);
  EXPECT_GT(ingest_.short_posts, 0u);
  EXPECT_EQ(read_jsonl(config_->out(kTimelinesFile)).size(), 25u);
  const auto partition = read_json_file(config_->out(kPartitionFile));
  EXPECT_EQ(partition["test"].size(), 5u);
}

TEST_F(FixtureRun, ProfilesAndCache) {
  EXPECT_EQ(profile_.profiles, 25u);
  EXPECT_FALSE(profile_.lda_cache_hit);
  std::ostringstream log;
  const auto again = run_profile(*config_, log);
  EXPECT_TRUE(again.lda_cache_hit);
  EXPECT_EQ(again.lda_path, profile_.lda_path);
  const auto rows = read_jsonl(config_->out(kProfilesFile));
  ASSERT_EQ(rows.size(), 25u);
  for (const auto& r : rows) EXPECT_TRUE(r.contains("flags"));
}

TEST_F(FixtureRun, SimulateOutcomes) {
  EXPECT_EQ(simulate_.users, 5u);
  EXPECT_EQ(simulate_.outcomes.at("completed"), 2);
  EXPECT_EQ(simulate_.outcomes.at("invalid-questionnaire"), 1);
  EXPECT_EQ(simulate_.outcomes.at("provider-refused"), 1);
  EXPECT_EQ(simulate_.outcomes.at("unverified-accepted"), 1);

  std::ostringstream log;
  const auto resumed = run_simulate(*config_, true, log);
  EXPECT_EQ(resumed.ran, 0u);
  EXPECT_EQ(resumed.resumed, 5u);
}

TEST_F(FixtureRun, EvaluationExclusions) {
  EXPECT_EQ(report_->traces, 5);
  long excluded = 0;
  for (const auto& [reason, n] : report_->exclusions) excluded += n;
  EXPECT_EQ(report_->evaluated, report_->traces - excluded);
  EXPECT_EQ(report_->exclusions.at("invalid-questionnaire"), 1);
  EXPECT_EQ(report_->unverified_accepted, 1);
  EXPECT_TRUE(report_->auc.has_value());
  const auto j = read_json_file(config_->out(kReportJsonFile));
  EXPECT_EQ(j["evaluated"], report_->evaluated);
  EXPECT_TRUE(j["config"].contains("overrides"));
}

TEST_F(FixtureRun, AnnotationStore) {
  EXPECT_GT(annotate_.posts, 0u);
  EXPECT_GT(annotate_.irrelevant, 0u);
  EXPECT_EQ(annotate_.variants, annotate_.labeled * 4);
  const auto rows = read_jsonl(config_->out(kLabelsFile));
  EXPECT_EQ(rows.size(), annotate_.posts);
  std::ostringstream log;
  const auto again = run_annotate(*config_, true, log);
  EXPECT_EQ(again.skipped, annotate_.posts);
}

TEST_F(FixtureRun, TraceReports) {
  const auto table = read_jsonl(config_->out(kTracesFile));
  std::string completed, excluded;
  for (const auto& row : table) {
    if (row["outcome"] == "completed" && completed.empty()) completed = row["user_id"];
    if (row["outcome"] == "invalid-questionnaire") excluded = row["user_id"];
  }
  ASSERT_FALSE(completed.empty());
  const auto text = run_trace(*config_, completed, false);
  for (const char* section : {"== Profile ==", "== Risk perception (PPDTS) ==", "== Panic arousal ==",
                              "== Panic probability ==", "== Generated posts ==", "== Expert verification =="}) {
    EXPECT_NE(text.find(section), std::string::npos) << section;
  }
  const auto bad = run_trace(*config_, excluded, false);
  EXPECT_NE(bad.find("invalid-questionnaire"), std::string::npos);
  EXPECT_NE(bad.find("Reason:"), std::string::npos);
  EXPECT_TRUE(nlohmann::json::parse(run_trace(*config_, completed, true)).contains("trace"));
  EXPECT_THROW(run_trace(*config_, "nobody", false), NotFound);
}

TEST(Ingest, MalformedFractionAborts) {
  testsupport::TempDir dir;
  {
    std::ofstream out(dir.path() / "posts.jsonl");
    out << "{\"post_id\":\"1\",\"user_id\":\"u\",\"timestamp\":1,\"text\":\"storm is coming to town\"}\n";
    out << "garbage\n{\n";
  }
  auto c = fixture_config(dir.path() / "out");
  c.posts = dir.path() / "posts.jsonl";
  std::ostringstream log;
  EXPECT_THROW(run_ingest(c, log), DataError);
}

TEST(Cli, ExitCodes) {
  testsupport::TempDir dir;
  const std::string base = "--config " + (testsupport::fixture_dir() / "config.json").string() + " --out-dir " +
                           dir.path().string();
  EXPECT_EQ(run_cli(base + " ingest"), 0);
  EXPECT_EQ(run_cli(base + " trace nobody"), 3);
  EXPECT_EQ(run_cli("--config /nonexistent/config.json ingest"), 2);
  EXPECT_NE(run_cli(base + " no-such-command"), 0);
}
