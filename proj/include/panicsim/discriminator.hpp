#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/agent.hpp"
#include "panicsim/corpus.hpp"
#include "panicsim/gateway.hpp"
#include "panicsim/http_provider.hpp"
#include "panicsim/labels.hpp"
#include "panicsim/lexicon.hpp"

namespace panicsim {

class PanicClassifier {
 public:
  virtual ~PanicClassifier() = default;
  virtual PanicLabel classify(const std::string& text) = 0;
  virtual std::string name() const = 0;
};

struct RuleFeatures {
  double lexicon_rate = 0;      // summed lexicon weight of word hits / word count
  double caps_rate = 0;         // all-caps tokens with >= 2 letters / token count
  double punctuation_rate = 0;  // runs of >= 2 '!' or '?' / token count
};

RuleFeatures rule_features(const std::string& text, const WeightLexicon& lexicon);

struct RuleWeights {
  double lexicon = 2.0;
  double caps = 1.5;
  double punctuation = 1.5;
  double threshold = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static RuleWeights from_json(const nlohmann::json& j);
  static RuleWeights load(const std::filesystem::path& path);
};

/// score = clamp(w . features, 0, 1); Panic iff score >= threshold.
class RuleClassifier : public PanicClassifier {
 public:
  RuleClassifier(WeightLexicon lexicon, RuleWeights weights) : lexicon_(std::move(lexicon)), weights_(weights) {}
  PanicLabel classify(const std::string& text) override;
  double score(const std::string& text) const;
  std::string name() const override { return "rule-lexicon"; }
  const RuleWeights& weights() const { return weights_; }

 private:
  WeightLexicon lexicon_;
  RuleWeights weights_;
};

/// Threshold maximizing F1 over a labeled set, scanning the midpoints
/// between distinct scores; ties go to the lowest threshold.
double calibrate_threshold(const std::vector<double>& scores, const std::vector<bool>& panic);

/// Panic prompt per text in session "classify/<text hash>"; leading Yes/No,
/// one re-prompt, then ClassificationUnavailable.
class LlmClassifier : public PanicClassifier {
 public:
  LlmClassifier(LlmHandle llm, std::string prompt_template, std::string reprompt)
      : llm_(std::move(llm)), template_(std::move(prompt_template)), reprompt_(std::move(reprompt)) {}
  PanicLabel classify(const std::string& text) override;
  std::string name() const override { return "llm-prompt"; }

 private:
  LlmHandle llm_;
  std::string template_;
  std::string reprompt_;
};

/// POST {"text": ...} -> {"label": "Panic"|"NoPanic", "score": x}.
class ExternalClassifier : public PanicClassifier {
 public:
  using Poster = std::function<HttpResult(const std::string& url, const std::string& body)>;
  explicit ExternalClassifier(std::string endpoint, double timeout_s = 60);
  ExternalClassifier(std::string endpoint, Poster poster);
  PanicLabel classify(const std::string& text) override;
  std::string name() const override { return "external-service"; }

 private:
  std::string endpoint_;
  Poster poster_;
};

/// Panic iff any member is Panic; score is the maximum. Throws DataError on
/// an empty list.
PanicLabel veto_aggregate(const std::vector<PanicLabel>& labels);

struct UserPrediction {
  std::string user_id;
  PanicLabel label;
  double ranking_score = 0;
};

/// Classifies every generated tweet and applies the veto; ranking score is
/// P_panic. nullopt for traces whose outcome excludes them.
std::optional<UserPrediction> predict_user(const StageTrace& trace, PanicClassifier& classifier);

/// Ground-truth mode: veto over the user's real post-phase posts.
PanicLabel label_from_posts(const UserTimeline& timeline, PanicClassifier& classifier);

}  // namespace panicsim
