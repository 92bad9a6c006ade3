#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace panicsim {

// Questionnaire.

struct PpdtsItem {
  int id = 0;              // 1..18
  std::string subscale;    // "KA" or "AAM"
  std::string text;
};

/// JSON array of {id, subscale, text}. Throws DataError unless there are
/// exactly 18 items, ids 1..18, 10 KA followed by 8 AAM.
std::vector<PpdtsItem> parse_ppdts_items(const nlohmann::json& j);
std::vector<PpdtsItem> load_ppdts_items(const std::filesystem::path& path);

/// "Q<id>: <text>" lines.
std::string render_ppdts_questions(const std::vector<PpdtsItem>& items);

struct PpdtsResponse {
  std::map<int, int> scores;            // id -> 1..4
  std::map<int, std::string> reasons;   // id -> reason
  int answered_count = 0;
  bool valid = false;
};

/// Scans for "Q<n>: <1-4> (<reason>)" lines, tolerating list numbering and
/// bold markers. Ids outside 1..item_count and scores outside 1..4 are not
/// counted; repeated ids keep the first counted answer.
PpdtsResponse parse_ppdts(std::string_view text, int required = 18, int item_count = 18);
std::string render_ppdts_answers(const PpdtsResponse& response);

// Arousal.

enum class ArousalFactor { Awareness, Coping, Uncertainty, Novelty };
inline constexpr std::array<ArousalFactor, 4> kArousalFactors = {ArousalFactor::Awareness, ArousalFactor::Coping,
                                                                 ArousalFactor::Uncertainty, ArousalFactor::Novelty};
std::string_view to_string(ArousalFactor f);

struct FactorScore {
  int score = 0;  // 1..5
  std::string reason;
};

struct ArousalFactors {
  std::array<FactorScore, 4> scores;

  const FactorScore& operator[](ArousalFactor f) const { return scores[static_cast<std::size_t>(f)]; }
  FactorScore& operator[](ArousalFactor f) { return scores[static_cast<std::size_t>(f)]; }
};

struct ArousalReading {
  ArousalFactors factors;
  std::optional<double> reported_probability;
};

/// "<Factor...>: <1-5>/5 (<reason>)" lines matched by case-insensitive name
/// prefix, plus the last "[NN%]" as the reported probability. Throws
/// ArousalParseError when a factor is missing or out of range.
ArousalReading parse_arousal(std::string_view text);
std::string render_arousal(const ArousalReading& reading);

/// P = sum over factors of 0.25 * (s - 1) / 4.
double fallback_probability(const ArousalFactors& factors);

// Tweets.

struct TweetCandidate {
  std::string text;
  std::vector<std::string> hashtags;
  bool verified = false;
  int attempt = 0;
};

inline constexpr std::string_view kTweetTerminator = "### End";

/// '#'-prefixed tokens, trailing punctuation stripped.
std::vector<std::string> extract_hashtags(std::string_view text);

/// Up to n non-empty bracketed segments before the terminator. Throws
/// GenerationParseError when the terminator is required but absent, or when
/// no segment is found.
std::vector<TweetCandidate> parse_tweets(std::string_view text, int n, bool require_terminator = true);
std::string render_tweets(const std::vector<std::string>& texts);

// Expert panel.

enum class Expert { Psychological, Linguistic, Factual, Emotional };
inline constexpr std::array<Expert, 4> kExperts = {Expert::Psychological, Expert::Linguistic, Expert::Factual,
                                                   Expert::Emotional};
std::string_view to_string(Expert e);

struct ExpertOpinion {
  bool pass = false;
  std::string reason;
};

struct ExpertVerdict {
  std::array<ExpertOpinion, 4> opinions;

  const ExpertOpinion& operator[](Expert e) const { return opinions[static_cast<std::size_t>(e)]; }
  ExpertOpinion& operator[](Expert e) { return opinions[static_cast<std::size_t>(e)]; }
  bool passed() const;
};

/// "<Expert>: YES/NO (<reason>)" lines; names matched by prefix (psych,
/// ling, fact, panic or emotion). Throws VerdictParseError when one is missing.
ExpertVerdict parse_verdict(std::string_view text);
std::string render_verdict(const ExpertVerdict& verdict);

/// Yes/No at the start of a reply, ignoring case, quotes, markdown and
/// trailing punctuation. nullopt when neither.
std::optional<bool> parse_leading_yes_no(std::string_view text);

}  // namespace panicsim
