#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "panicsim/corpus.hpp"
#include "panicsim/disaster.hpp"
#include "panicsim/gateway.hpp"
#include "panicsim/http_provider.hpp"
#include "panicsim/lda.hpp"
#include "panicsim/lexicon.hpp"
#include "panicsim/themes.hpp"

namespace panicsim {

/// Big Five scores in [0, 1], indexed in kTraits order.
struct PersonalityVector {
  std::array<double, 5> values{0.5, 0.5, 0.5, 0.5, 0.5};

  double operator[](Trait t) const { return values[static_cast<std::size_t>(t)]; }
  double& operator[](Trait t) { return values[static_cast<std::size_t>(t)]; }
};

class PersonalityScorer {
 public:
  virtual ~PersonalityScorer() = default;
  /// `tag` names the caller (user id plus purpose) for scorers that log calls.
  virtual PersonalityVector score(const std::string& tag, const std::vector<std::string>& texts) = 0;
  virtual std::string name() const = 0;
};

/// score_t = 0.5 + 0.5 * tanh(gain * s_t / n), where s_t sums the trait
/// weights of lexicon hits and n counts all word tokens.
class LexiconPersonalityScorer : public PersonalityScorer {
 public:
  explicit LexiconPersonalityScorer(TraitLexicon lexicon, double gain = 4.0)
      : lexicon_(std::move(lexicon)), gain_(gain) {}
  PersonalityVector score(const std::string& tag, const std::vector<std::string>& texts) override;
  std::string name() const override { return "lexicon"; }

 private:
  TraitLexicon lexicon_;
  double gain_;
};

/// Parses "<Trait>: <number in [0,1]>" lines for all five traits.
PersonalityVector parse_personality_reply(const std::string& reply);

class LlmPersonalityScorer : public PersonalityScorer {
 public:
  LlmPersonalityScorer(LlmHandle llm, std::string prompt_template, std::string reprompt)
      : llm_(std::move(llm)), template_(std::move(prompt_template)), reprompt_(std::move(reprompt)) {}
  PersonalityVector score(const std::string& tag, const std::vector<std::string>& texts) override;
  std::string name() const override { return "llm"; }

 private:
  LlmHandle llm_;
  std::string template_;
  std::string reprompt_;
};

/// POST {"texts": [...]} -> {"openness": x, ..., "neuroticism": x}.
class ExternalPersonalityScorer : public PersonalityScorer {
 public:
  using Poster = std::function<HttpResult(const std::string& url, const std::string& body)>;
  explicit ExternalPersonalityScorer(std::string endpoint, double timeout_s = 60);
  ExternalPersonalityScorer(std::string endpoint, Poster poster);
  PersonalityVector score(const std::string& tag, const std::vector<std::string>& texts) override;
  std::string name() const override { return "external"; }

 private:
  std::string endpoint_;
  Poster poster_;
};

struct ConsistencyResult {
  bool consistent = true;
  std::array<double, 5> deltas{};
};

/// Scores alternating halves (even and odd positions) separately. Throws
/// InsufficientData for fewer than two posts.
ConsistencyResult check_personality_consistency(const std::vector<std::string>& texts, PersonalityScorer& scorer,
                                                double float_range, const std::string& tag = "consistency");

enum class Sentiment { Positive, Neutral, Negative };
std::string_view to_string(Sentiment s);

class SentimentClassifier {
 public:
  virtual ~SentimentClassifier() = default;
  virtual Sentiment classify(const std::string& tag, const std::string& text) = 0;
  virtual std::string name() const = 0;
};

/// Sums the signs of lexicon hits; zero means neutral.
class LexiconSentimentClassifier : public SentimentClassifier {
 public:
  explicit LexiconSentimentClassifier(WeightLexicon lexicon) : lexicon_(std::move(lexicon)) {}
  Sentiment classify(const std::string& tag, const std::string& text) override;
  std::string name() const override { return "lexicon"; }

 private:
  WeightLexicon lexicon_;
};

/// Parses a leading positive/neutral/negative word.
Sentiment parse_sentiment_reply(const std::string& reply);

class LlmSentimentClassifier : public SentimentClassifier {
 public:
  LlmSentimentClassifier(LlmHandle llm, std::string prompt_template, std::string reprompt)
      : llm_(std::move(llm)), template_(std::move(prompt_template)), reprompt_(std::move(reprompt)) {}
  Sentiment classify(const std::string& tag, const std::string& text) override;
  std::string name() const override { return "llm"; }

 private:
  LlmHandle llm_;
  std::string template_;
  std::string reprompt_;
};

struct DailySentiment {
  std::int64_t day = 0;  // days since epoch, UTC
  int positive = 0;
  int neutral = 0;
  int negative = 0;
};

struct SentimentTrend {
  double positive = 0;
  double neutral = 0;
  double negative = 0;
  std::vector<DailySentiment> daily;
};

/// Throws FeatureUnavailable for an empty post list.
SentimentTrend sentiment_trend(const std::string& user_id, const std::vector<RawPost>& posts,
                               SentimentClassifier& classifier);

struct ToneTriple {
  std::array<std::string, 3> words;
};

/// Exactly three comma-separated words; throws RetryableParseError otherwise.
ToneTriple parse_tone(const std::string& reply);

/// Session "<user_id>/tone"; one re-prompt, then ToneUnavailable.
ToneTriple extract_tone(const std::string& user_id, const std::vector<std::string>& texts, const LlmHandle& llm,
                        const std::string& prompt_template, const std::string& reprompt);

struct RiskCommFeatures {
  std::uint64_t follower_count = 0;
  std::uint64_t followee_count = 0;
  double posts_per_day = 0;
  std::optional<double> distance_to_track_km;
};

/// |pre| divided by the days between the first pre-phase post and the
/// disaster time (at least one day).
double posts_per_day(const std::vector<RawPost>& pre_posts, std::int64_t disaster_time);

struct UserProfile {
  std::string user_id;
  PersonalityVector personality;
  SentimentTrend sentiment;
  Eigen::VectorXd topic_weights;  // theta
  ThemeProfile themes;
  std::optional<ToneTriple> tone;
  RiskCommFeatures risk_comm;
  std::vector<std::string> relevant_posts;
  std::set<std::string> flags;
};

nlohmann::json to_json(const UserProfile& profile);
UserProfile profile_from_json(const nlohmann::json& j);

struct ProfileContext {
  const DisasterContext* disaster = nullptr;
  std::int64_t disaster_time = 0;
  PersonalityScorer* personality = nullptr;
  SentimentClassifier* sentiment = nullptr;
  const TopicModel* topics = nullptr;
  const ThemeMembership* themes = nullptr;
  const std::set<std::string>* stopwords = nullptr;
  std::optional<LlmHandle> tone_llm;  // no tone extraction when absent
  std::string tone_template;
  std::string reprompt;
  std::vector<std::string> query_terms;
  std::size_t relevant_k = 5;
  int infer_iterations = 50;
  std::uint64_t seed = 2012;
};

/// Populates every feature; extractor failures become flags.
UserProfile build_profile(const UserTimeline& timeline, const ProfileContext& ctx);

}  // namespace panicsim
