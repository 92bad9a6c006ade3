#include <algorithm>

#include <gtest/gtest.h>

#include "panicsim/discriminator.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/mock_provider.hpp"
#include "panicsim/rng.hpp"
#include "support.hpp"

using namespace panicsim;

namespace {

RuleClassifier bundled_rule() {
  return RuleClassifier(WeightLexicon::load(testsupport::assets_dir() / "panic_lexicon.tsv"),
                        RuleWeights::load(testsupport::assets_dir() / "discriminator_rule.json"));
}

std::vector<PanicLabel> random_labels(Rng& rng, std::size_t n) {
  std::vector<PanicLabel> labels(n);
  for (auto& l : labels) {
    l.label = rng.below(4) == 0 ? PanicClass::Panic : PanicClass::NoPanic;
    l.score = rng.uniform();
  }
  return labels;
}

}  // namespace

TEST(Veto, Examples) {
  const PanicLabel no{PanicClass::NoPanic, 0.1}, yes{PanicClass::Panic, 0.9};
  EXPECT_TRUE(veto_aggregate({no, yes, no}).is_panic());
  EXPECT_FALSE(veto_aggregate({no, no}).is_panic());
  EXPECT_TRUE(veto_aggregate({yes}).is_panic());
  EXPECT_THROW(veto_aggregate({}), DataError);
}

TEST(Veto, PermutationInvariance) {
  Rng rng(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    auto labels = random_labels(rng, 1 + rng.below(12));
    const auto base = veto_aggregate(labels);
    rng.shuffle(labels);
    EXPECT_EQ(veto_aggregate(labels), base);
    std::reverse(labels.begin(), labels.end());
    EXPECT_EQ(veto_aggregate(labels), base);
  }
}

TEST(Veto, Monotonicity) {
  Rng rng(2000);
  for (int trial = 0; trial < 1000; ++trial) {
    auto labels = random_labels(rng, 1 + rng.below(12));
    const auto base = veto_aggregate(labels);

    // adding any label never turns Panic into NoPanic
    auto grown = labels;
    grown.push_back(random_labels(rng, 1)[0]);
    if (base.is_panic()) {
      EXPECT_TRUE(veto_aggregate(grown).is_panic());
    }
    EXPECT_GE(veto_aggregate(grown).score, base.score);

    // flipping one member to Panic never turns the user NoPanic
    auto flipped = labels;
    flipped[rng.below(flipped.size())].label = PanicClass::Panic;
    EXPECT_TRUE(veto_aggregate(flipped).is_panic());

    // the result is Panic exactly when some member is
    const bool any = std::any_of(labels.begin(), labels.end(), [](const PanicLabel& l) { return l.is_panic(); });
    EXPECT_EQ(base.is_panic(), any);
  }
}

TEST(RuleClassifier, Examples) {
  auto rule = bundled_rule();
  const auto empty = rule.classify("");
  EXPECT_FALSE(empty.is_panic());
  EXPECT_EQ(empty.score, 0.0);
  EXPECT_TRUE(rule.classify("SCARY AF!!! we're trapped, HELP").is_panic());
  EXPECT_FALSE(rule.classify("Power is back and everyone is fine, cooking dinner now").is_panic());
  const auto s = rule.score("terrified terrified");
  EXPECT_GE(s, 0.0);
  EXPECT_LE(s, 1.0);
}

TEST(RuleClassifier, Features) {
  WeightLexicon lex(std::map<std::string, double>{{"scared", 1.0}});
  const auto f = rule_features("SO scared!!! ok??", lex);
  EXPECT_DOUBLE_EQ(f.lexicon_rate, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.caps_rate, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.punctuation_rate, 2.0 / 3.0);
}

TEST(Calibration, PicksBestMidpoint) {
  // perfectly separable: any threshold in (0.4, 0.6) is optimal; the lowest midpoint wins
  EXPECT_DOUBLE_EQ(calibrate_threshold({0.1, 0.4, 0.6, 0.9}, {false, false, true, true}), 0.5);
  // brute-force oracle over candidate thresholds on random sets
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 4 + rng.below(30);
    std::vector<double> s(n);
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(20)) / 20.0;
      y[i] = rng.uniform() < s[i];
    }
    auto f1_at = [&](double t) {
      long tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool p = s[i] >= t;
        tp += p && y[i];
        fp += p && !y[i];
        fn += !p && y[i];
      }
      return tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    };
    const double t = calibrate_threshold(s, y);
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    double best = 0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) best = std::max(best, f1_at((sorted[i] + sorted[i + 1]) / 2));
    EXPECT_NEAR(f1_at(t), best, 1e-12);
  }
}

TEST(LlmClassifier, YesNoWithOneReprompt) {
  const std::string yes_text = "we are trapped";
  const std::string bad_text = "what is this";
  MockScript script;
  script.set_reply("classify/" + hex64(fnv1a64(yes_text)), 0, "Yes. The text reflects panic emotions.");
  script.set_reply("classify/" + hex64(fnv1a64(bad_text)), 0, "Hmm");
  script.set_reply("classify/" + hex64(fnv1a64(bad_text)), 1, "Unsure");
  LlmHandle llm{std::make_shared<MockProvider>(script), std::make_shared<Transcript>(), {}};
  LlmClassifier c(llm, "Does this text show panic? {text}", "Answer Yes or No.");
  EXPECT_TRUE(c.classify(yes_text).is_panic());
  EXPECT_THROW(c.classify(bad_text), ClassificationUnavailable);
  EXPECT_EQ(llm.transcript->size(), 3u);
}

TEST(ExternalClassifier, ParsesServiceReply) {
  std::string seen_body;
  ExternalClassifier c("http://stub/classify", [&](const std::string&, const std::string& body) {
    seen_body = body;
    return HttpResult{200, R"({"label":"Panic","score":0.8})", "", std::nullopt};
  });
  const auto l = c.classify("help");
  EXPECT_TRUE(l.is_panic());
  EXPECT_DOUBLE_EQ(l.score, 0.8);
  EXPECT_EQ(nlohmann::json::parse(seen_body)["text"], "help");

  ExternalClassifier broken("http://stub/classify", [](const std::string&, const std::string&) {
    return HttpResult{500, "oops", "", std::nullopt};
  });
  EXPECT_THROW(broken.classify("help"), ClassificationUnavailable);
}

TEST(PredictUser, VetoAndExclusions) {
  auto rule = bundled_rule();
  StageTrace t;
  t.user_id = "u";
  t.outcome = Outcome::Completed;
  t.panic = PanicAssessment{0.3, ProbabilitySource::LlmReported};
  t.tweets = {{"Quiet night, power still on", {}, true, 1},
              {"SCARY AF!!! we're trapped, HELP", {}, true, 1},
              {"Making tea and reading", {}, true, 1}};
  auto p = predict_user(t, rule);
  ASSERT_TRUE(p.has_value());
  EXPECT_TRUE(p->label.is_panic());
  EXPECT_DOUBLE_EQ(p->ranking_score, 0.3);

  t.tweets = {{"Quiet night, power still on", {}, true, 1}};
  p = predict_user(t, rule);
  ASSERT_TRUE(p.has_value());
  EXPECT_FALSE(p->label.is_panic());
  EXPECT_DOUBLE_EQ(p->ranking_score, 0.3);

  t.outcome = Outcome::InvalidQuestionnaire;
  EXPECT_FALSE(predict_user(t, rule).has_value());
}

TEST(Labels, ParseForms) {
  EXPECT_EQ(parse_panic_class("Panic"), PanicClass::Panic);
  EXPECT_EQ(parse_panic_class("nopanic"), PanicClass::NoPanic);
  EXPECT_EQ(parse_panic_class("YES"), PanicClass::Panic);
  EXPECT_EQ(parse_panic_class("0"), PanicClass::NoPanic);
  EXPECT_FALSE(parse_panic_class("maybe").has_value());
}
