#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "panicsim/errors.hpp"
#include "panicsim/lda.hpp"
#include "panicsim/lexicon.hpp"
#include "panicsim/mock_provider.hpp"
#include "panicsim/profile.hpp"
#include "panicsim/retrieval.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/templates.hpp"
#include "panicsim/text.hpp"
#include "panicsim/themes.hpp"
#include "support.hpp"

using namespace panicsim;

namespace {

RawPost post(std::string id, std::int64_t ts, std::string text) {
  RawPost p;
  p.post_id = std::move(id);
  p.user_id = "u";
  p.timestamp = ts;
  p.text = std::move(text);
  return p;
}

// Two disjoint vocabularies; every document draws from one of them.
std::vector<std::vector<std::string>> two_topic_corpus(std::vector<int>& source, std::uint64_t seed) {
  const std::vector<std::string> a = {"storm", "wind", "rain", "flood", "surge", "tide", "gust", "cloud"};
  const std::vector<std::string> b = {"vote", "debate", "ballot", "senate", "poll", "campaign", "party", "election"};
  Rng rng(seed);
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 80; ++d) {
    const int s = d % 2;
    source.push_back(s);
    std::vector<std::string> doc;
    for (int w = 0; w < 12; ++w) doc.push_back((s ? b : a)[rng.below(8)]);
    docs.push_back(doc);
  }
  return docs;
}

bool on_simplex(const Eigen::VectorXd& v) {
  return (v.array() >= -1e-12).all() && std::abs(v.sum() - 1.0) <= 1e-9;
}

}  // namespace

// Topic model

TEST(Lda, TwoTopicPurityAndSimplex) {
  std::vector<int> source;
  const auto docs = two_topic_corpus(source, 5);
  LdaParams params;
  params.topics = 2;
  params.iterations = 200;
  params.alpha = 0.5;  // 50 / K mixes slowly at K = 2
  params.seed = 3;
  const auto fit = fit_lda(docs, params);

  const auto& vocab = fit.model.vocabulary();
  const auto& phi = fit.model.phi();
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(phi.row(k).sum(), 1.0, 1e-9);
    double mass_a = 0;
    for (std::size_t w = 0; w < vocab.size(); ++w) {
      const bool in_a = std::string("storm wind rain flood surge tide gust cloud").find(vocab[w]) != std::string::npos;
      if (in_a) mass_a += phi(k, static_cast<Eigen::Index>(w));
    }
    EXPECT_GE(std::max(mass_a, 1.0 - mass_a), 0.9) << "topic " << k;
  }
  for (Eigen::Index d = 0; d < fit.doc_topic.rows(); ++d) {
    EXPECT_TRUE(on_simplex(fit.doc_topic.row(d).transpose()));
  }

  // same seed, same model
  const auto again = fit_lda(docs, params);
  EXPECT_EQ(again.model.topic_word_counts(), fit.model.topic_word_counts());

  // json round trip keeps phi
  const auto restored = TopicModel::from_json(fit.model.to_json());
  EXPECT_TRUE(restored.phi().isApprox(phi, 1e-12));
}

TEST(Lda, InferenceFallbackAndConcentration) {
  std::vector<int> source;
  const auto docs = two_topic_corpus(source, 9);
  LdaParams params;
  params.topics = 2;
  params.iterations = 200;
  params.alpha = 0.5;
  const auto fit = fit_lda(docs, params);

  const auto oov = infer_topics(fit.model, {{"zebra", "quasar"}});
  EXPECT_TRUE(oov.out_of_vocabulary);
  EXPECT_NEAR(oov.theta(0), 0.5, 1e-12);
  EXPECT_NEAR(oov.theta(1), 0.5, 1e-12);

  const auto same = infer_topics(fit.model, {docs[0], docs[0], docs[0]});
  EXPECT_FALSE(same.out_of_vocabulary);
  EXPECT_GE(same.theta.maxCoeff(), 0.5);
  EXPECT_TRUE(on_simplex(same.theta));

  LdaParams k25;
  k25.iterations = 20;
  const auto fit25 = fit_lda(docs, k25);
  const auto uniform = infer_topics(fit25.model, {});
  EXPECT_TRUE(uniform.out_of_vocabulary);
  for (Eigen::Index k = 0; k < 25; ++k) EXPECT_NEAR(uniform.theta(k), 1.0 / 25, 1e-12);

  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<std::string>> user;
    for (int p = 0; p < 1 + static_cast<int>(rng.below(5)); ++p) user.push_back(docs[rng.below(docs.size())]);
    EXPECT_TRUE(on_simplex(infer_topics(fit25.model, user, 10, rng.next()).theta));
  }
}

TEST(Lda, TopicTokens) {
  const std::set<std::string> stop = {"the", "is"};
  EXPECT_EQ(topic_tokens("The storm IS here, 2012 don't a", stop), (std::vector<std::string>{"storm", "here", "dont"}));
  EXPECT_THROW(fit_lda({{}, {}}, LdaParams{}), DataError);
}

// Themes

TEST(Themes, StaticAssignment) {
  const auto config = StaticThemeConfig::load(testsupport::assets_dir() / "themes.json");
  EXPECT_EQ(kThemeNames[static_cast<std::size_t>(assign_theme({"weather", "wind", "rain", "hurricane", "storm"}, config))],
            "Natural Disasters & Weather");
  EXPECT_EQ(kThemeNames[static_cast<std::size_t>(assign_theme({"qwxz", "zzyzx"}, config))], "Miscellaneous");

  const auto round = StaticThemeConfig::from_json(config.to_json());
  EXPECT_EQ(round.to_json(), config.to_json());

  std::vector<std::vector<std::string>> topics(25, std::vector<std::string>{"storm"});
  topics[3] = {"election", "vote"};
  const auto m = consolidate_static(topics, config);
  EXPECT_EQ(m.topics(), 25);
  for (Eigen::Index c = 0; c < m.gamma.cols(); ++c) EXPECT_DOUBLE_EQ(m.gamma.col(c).sum(), 1.0);
  EXPECT_EQ(ThemeMembership::from_json(m.to_json()).assignment(), m.assignment());
}

TEST(Themes, ExplicitAssignmentWins) {
  StaticThemeConfig config;
  config.seed_keywords["Politics & Elections"] = {"vote"};
  config.assignments[0] = "Sports & Entertainment";
  const auto m = consolidate_static({{"vote"}, {"vote"}}, config);
  EXPECT_EQ(m.assignment(), (std::vector<int>{3, 0}));
}

TEST(Themes, ThemeProfileOracle) {
  std::vector<int> assignment(25);
  for (int k = 0; k < 25; ++k) assignment[static_cast<std::size_t>(k)] = k % 8;
  const auto m = ThemeMembership::from_assignment(assignment);

  Eigen::VectorXd onehot = Eigen::VectorXd::Zero(25);
  onehot(10) = 1.0;
  const auto p = theme_profile(m, onehot);
  EXPECT_DOUBLE_EQ(p.weights(10 % 8), 1.0);
  EXPECT_DOUBLE_EQ(p.weights.sum(), 1.0);
  ASSERT_EQ(p.top_themes.size(), 1u);
  EXPECT_EQ(p.top_themes[0], kThemeNames[2]);

  const auto uni = theme_profile(m, Eigen::VectorXd::Constant(25, 1.0 / 25));
  for (int t = 0; t < 8; ++t) {
    const int members = static_cast<int>(std::count(assignment.begin(), assignment.end(), t));
    EXPECT_NEAR(uni.weights(t), members / 25.0, 1e-12);
  }

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd theta(25);
    for (int k = 0; k < 25; ++k) theta(k) = rng.uniform();
    theta /= theta.sum();
    for (int t = 0; t < 8; ++t) {
      double expected = 0;
      for (int k = 0; k < 25; ++k)
        if (assignment[static_cast<std::size_t>(k)] == t) expected += theta(k);
      EXPECT_NEAR(theme_profile(m, theta).weights(t), expected, 1e-12);
    }
  }
  EXPECT_THROW(consolidate_topic_weights(m.gamma, Eigen::VectorXd::Ones(3)), DataError);
}

TEST(Themes, LlmConsolidationFallsBack) {
  std::vector<std::vector<std::string>> topics = {{"storm", "wind"}, {"vote", "ballot"}};
  StaticThemeConfig fallback;
  fallback.seed_keywords["Natural Disasters & Weather"] = {"storm"};

  MockScript good;
  good.set_reply("themes", 0, "Topic 1: Natural Disasters & Weather\nTopic 2: Politics & Elections");
  auto r = consolidate_llm(topics, "{topics}{themes}", "again", std::make_shared<MockProvider>(good), nullptr, {}, fallback);
  EXPECT_FALSE(r.fell_back_to_static);
  EXPECT_EQ(r.membership.assignment(), (std::vector<int>{1, 0}));

  MockScript bad;
  bad.set_reply("themes", 0, "no idea");
  bad.set_reply("themes", 1, "Topic 1: Weather stuff");
  r = consolidate_llm(topics, "{topics}{themes}", "again", std::make_shared<MockProvider>(bad), nullptr, {}, fallback);
  EXPECT_TRUE(r.fell_back_to_static);
  EXPECT_EQ(r.membership.assignment(), (std::vector<int>{1, 7}));
}

// Retrieval

TEST(Retrieval, Examples) {
  std::vector<RawPost> posts = {post("1", 1, "nice lunch today"), post("2", 2, "hurricane warning issued"),
                                post("3", 3, "storm hurricane hurricane coming")};
  const auto got = retrieve_relevant(posts, {"hurricane", "storm"}, 5);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].post_id, "3");
  EXPECT_EQ(got[1].post_id, "2");
  EXPECT_TRUE(retrieve_relevant(posts, {"earthquake"}, 5).empty());
}

TEST(Retrieval, MatchesExhaustiveOracle) {
  const std::vector<std::string> vocab = {"storm", "hurricane", "rain", "lunch", "game", "wind", "power"};
  const std::vector<std::string> query = {"storm", "hurricane", "wind"};
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<RawPost> posts;
    for (int i = 0; i < 10; ++i) {
      std::string t;
      for (std::size_t k = 0; k < 1 + rng.below(6); ++k) t += vocab[rng.below(vocab.size())] + " ";
      posts.push_back(post("p" + std::to_string(i), static_cast<std::int64_t>(rng.below(5)), t));
    }
    // oracle: tf * (ln((N+1)/(df+1)) + 1) summed over query terms
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < posts.size(); ++i) {
      double s = 0;
      for (const auto& q : query) {
        int tf = 0, df = 0;
        for (const auto& w : split_whitespace(posts[i].text)) tf += w == q;
        for (const auto& p : posts) {
          const auto words = split_whitespace(p.text);
          df += std::find(words.begin(), words.end(), q) != words.end();
        }
        if (tf) s += tf * (std::log((10.0 + 1) / (df + 1)) + 1);
      }
      if (s > 0) scored.push_back({s, i});
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
      const auto& pa = posts[a.second];
      const auto& pb = posts[b.second];
      if (pa.timestamp != pb.timestamp) return pa.timestamp > pb.timestamp;
      return pa.post_id > pb.post_id;
    });
    const auto got = retrieve_relevant(posts, query, 5);
    ASSERT_EQ(got.size(), std::min<std::size_t>(5, scored.size()));
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].post_id, posts[scored[i].second].post_id);
  }
}

// Templates

TEST(Templates, RenderAndErrors) {
  EXPECT_EQ(template_placeholders("a {x} {y_1} {Bad} {not valid} {x}"), (std::set<std::string>{"x", "y_1"}));
  EXPECT_EQ(render_template("P={p}% {Literal}", {{"p", "55"}}), "P=55% {Literal}");
  EXPECT_THROW(render_template("{a} {b}", {{"a", "1"}}), TemplateError);
  EXPECT_EQ(render_template("{a}", {{"a", "{b}"}}), "{b}");

  const auto set = TemplateSet::load(testsupport::assets_dir() / "templates");
  for (const auto* name : {"stage1_perception", "stage2_risk_perception", "stage3_panic_arousal", "stage4_generation",
                           "stage4_expert_review", "feedback", "reprompt", "tone", "annotate_relevance",
                           "annotate_panic"}) {
    EXPECT_TRUE(set.contains(name)) << name;
  }
  EXPECT_THROW(set.get("nope"), TemplateError);
}

// Lexicons and profile features

TEST(Lexicon, Parsing) {
  std::istringstream w("# comment\nscared\t1.5\n\ncalm\t-1\n");
  const auto lex = WeightLexicon::parse(w);
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_DOUBLE_EQ(*lex.find("calm"), -1.0);

  std::istringstream t("worry\tneuroticism\t0.8\nworry\topenness\t-0.1\n");
  const auto traits = TraitLexicon::parse(t);
  ASSERT_NE(traits.find("worry"), nullptr);
  EXPECT_DOUBLE_EQ((*traits.find("worry"))[4], 0.8);
  EXPECT_DOUBLE_EQ((*traits.find("worry"))[0], -0.1);

  std::istringstream bad("worry\tgrumpiness\t1\n");
  EXPECT_THROW(TraitLexicon::parse(bad), DataError);
}

TEST(Personality, BundledScorer) {
  LexiconPersonalityScorer scorer(TraitLexicon::load(testsupport::assets_dir() / "personality_lexicon.tsv"));
  const auto neutral = scorer.score("t", {"qqq zzz", "xxy"});
  for (double v : neutral.values) EXPECT_DOUBLE_EQ(v, 0.5);

  const auto a = scorer.score("t", {"I am so worried and anxious", "nervous and afraid tonight"});
  const auto b = scorer.score("t", {"I am so worried and anxious", "nervous and afraid tonight"});
  EXPECT_EQ(a.values, b.values);
  EXPECT_GT(a[Trait::Neuroticism], 0.5);
  for (double v : a.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Personality, Consistency) {
  LexiconPersonalityScorer scorer(TraitLexicon::load(testsupport::assets_dir() / "personality_lexicon.tsv"));
  const auto same = check_personality_consistency({"worried anxious", "worried anxious"}, scorer, 0.15);
  EXPECT_TRUE(same.consistent);
  for (double d : same.deltas) EXPECT_DOUBLE_EQ(d, 0.0);

  const std::vector<std::string> split = {"worried anxious nervous afraid", "party friends fun social",
                                          "panic scared worry fear", "chat party crowd friends"};
  EXPECT_FALSE(check_personality_consistency(split, scorer, 0.15).consistent);
  EXPECT_TRUE(check_personality_consistency(split, scorer, 1.0).consistent);
  EXPECT_THROW(check_personality_consistency({"one"}, scorer, 0.15), InsufficientData);

  EXPECT_DOUBLE_EQ(parse_personality_reply("Openness: 0.7\nConscientiousness: 0.2\nExtraversion: 0.5\n"
                                           "Agreeableness: 1\nNeuroticism: 0")[Trait::Openness],
                   0.7);
  EXPECT_THROW(parse_personality_reply("Openness: 0.7"), ParseError);
}

TEST(Sentiment, BaselineAndTrend) {
  LexiconSentimentClassifier c(WeightLexicon(std::map<std::string, double>{{"great", 1}, {"awful", -1}}));
  EXPECT_EQ(c.classify("t", ""), Sentiment::Neutral);
  EXPECT_EQ(c.classify("t", "great great"), Sentiment::Positive);
  EXPECT_EQ(c.classify("t", "great but awful"), Sentiment::Neutral);

  const std::int64_t day = 86400;
  std::vector<RawPost> posts = {post("1", 0, "great"), post("2", 10, "great"), post("3", day, "awful"),
                                post("4", 2 * day + 5, "meh")};
  const auto trend = sentiment_trend("u", posts, c);
  EXPECT_DOUBLE_EQ(trend.positive, 0.5);
  EXPECT_DOUBLE_EQ(trend.negative, 0.25);
  EXPECT_DOUBLE_EQ(trend.neutral, 0.25);
  ASSERT_EQ(trend.daily.size(), 3u);
  EXPECT_EQ(trend.daily[0].positive, 2);
  EXPECT_EQ(trend.daily[1].negative, 1);
  EXPECT_EQ(trend.daily[2].neutral, 1);

  const auto one_day = sentiment_trend("u", {post("1", 5, "great"), post("2", 50, "awful")}, c);
  EXPECT_EQ(one_day.daily.size(), 1u);
  EXPECT_THROW(sentiment_trend("u", {}, c), FeatureUnavailable);
  EXPECT_EQ(parse_sentiment_reply("Negative - sounds upset"), Sentiment::Negative);
}

TEST(Tone, ParseAndExtract) {
  EXPECT_EQ(parse_tone("Casual, Humorous, Restless").words, (std::array<std::string, 3>{"Casual", "Humorous", "Restless"}));
  EXPECT_EQ(parse_tone("Calm,Dry,Terse").words, (std::array<std::string, 3>{"Calm", "Dry", "Terse"}));
  EXPECT_THROW(parse_tone("Calm, Dry"), RetryableParseError);

  MockScript script;
  script.set_reply("u/tone", 0, "Calm, Dry");
  script.set_reply("u/tone", 1, "Calm, Dry, Terse");
  script.set_reply("v/tone", 0, "?");
  script.set_reply("v/tone", 1, "??");
  LlmHandle llm{std::make_shared<MockProvider>(script), nullptr, {}};
  EXPECT_EQ(extract_tone("u", {"a post"}, llm, "{posts}", "again").words[2], "Terse");
  EXPECT_THROW(extract_tone("v", {"a post"}, llm, "{posts}", "again"), ToneUnavailable);
}

TEST(Profile, RiskCommAndFlags) {
  std::vector<RawPost> pre;
  for (int i = 0; i < 20; ++i) pre.push_back(post(std::to_string(i), i * 43200, "calm day"));
  EXPECT_DOUBLE_EQ(posts_per_day(pre, 10 * 86400), 2.0);
  EXPECT_DOUBLE_EQ(haversine_km(40.7, -74.0, 40.7, -74.0), 0.0);

  UserTimeline t;
  t.user_id = "u";
  t.pre_posts = pre;
  ProfileContext ctx;
  ctx.disaster_time = 10 * 86400;
  const auto p = build_profile(t, ctx);
  EXPECT_FALSE(p.risk_comm.distance_to_track_km.has_value());
  EXPECT_TRUE(p.flags.count("distance_unavailable"));
  EXPECT_TRUE(p.flags.count("tone_unavailable"));

  const auto restored = profile_from_json(to_json(p));
  EXPECT_EQ(restored.flags, p.flags);
  EXPECT_DOUBLE_EQ(restored.risk_comm.posts_per_day, 2.0);
}
