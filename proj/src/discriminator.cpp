#include "panicsim/discriminator.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/parsers.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/templates.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

RuleFeatures rule_features(const std::string& text, const WeightLexicon& lexicon) {
  RuleFeatures f;
  const auto tokens = split_whitespace(text);
  if (tokens.empty()) return f;
  int caps = 0, runs = 0;
  for (const auto& token : tokens) {
    int letters = 0;
    bool all_upper = true;
    for (char c : token) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        ++letters;
        if (std::islower(static_cast<unsigned char>(c))) all_upper = false;
      }
    }
    if (letters >= 2 && all_upper) ++caps;
    for (std::size_t i = 0; i < token.size();) {
      if (token[i] == '!' || token[i] == '?') {
        std::size_t j = i;
        while (j < token.size() && (token[j] == '!' || token[j] == '?')) ++j;
        if (j - i >= 2) ++runs;
        i = j;
      } else {
        ++i;
      }
    }
  }
  const auto words = word_tokens(text);
  double hits = 0;
  for (const auto& w : words) {
    if (auto weight = lexicon.find(w)) hits += *weight;
  }
  const auto n = static_cast<double>(tokens.size());
  f.lexicon_rate = words.empty() ? 0.0 : hits / static_cast<double>(words.size());
  f.caps_rate = caps / n;
  f.punctuation_rate = runs / n;
  return f;
}

void RuleWeights::validate() const {
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("rule threshold must be in (0, 1]");
  if (lexicon < 0 || caps < 0 || punctuation < 0) throw ConfigError("rule weights must be non-negative");
}

json RuleWeights::to_json() const {
  return {{"lexicon_weight", lexicon}, {"caps_weight", caps}, {"punctuation_weight", punctuation}, {"threshold", threshold}};
}

RuleWeights RuleWeights::from_json(const json& j) {
  RuleWeights w;
  w.lexicon = j.value("lexicon_weight", w.lexicon);
  w.caps = j.value("caps_weight", w.caps);
  w.punctuation = j.value("punctuation_weight", w.punctuation);
  w.threshold = j.value("threshold", w.threshold);
  w.validate();
  return w;
}

RuleWeights RuleWeights::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

double RuleClassifier::score(const std::string& text) const {
  const auto f = rule_features(text, lexicon_);
  const double s = weights_.lexicon * f.lexicon_rate + weights_.caps * f.caps_rate + weights_.punctuation * f.punctuation_rate;
  return std::clamp(s, 0.0, 1.0);
}

PanicLabel RuleClassifier::classify(const std::string& text) {
  const double s = score(text);
  return {s >= weights_.threshold ? PanicClass::Panic : PanicClass::NoPanic, s};
}

double calibrate_threshold(const std::vector<double>& scores, const std::vector<bool>& panic) {
  if (scores.size() != panic.size() || scores.empty()) throw DataError("calibration needs matching, non-empty inputs");
  std::set<double> distinct(scores.begin(), scores.end());
  std::vector<double> candidates;
  double prev = -1;
  for (double s : distinct) {
    if (prev >= 0) candidates.push_back((prev + s) / 2);
    prev = s;
  }
  if (candidates.empty()) candidates.push_back(*distinct.begin() > 0 ? *distinct.begin() : 0.5);
  double best_t = candidates.front();
  double best_f1 = -1;
  for (double t : candidates) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool pred = scores[i] >= t;
      tp += pred && panic[i];
      fp += pred && !panic[i];
      fn += !pred && panic[i];
    }
    const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return std::clamp(best_t, 1e-6, 1.0);
}

PanicLabel LlmClassifier::classify(const std::string& text) {
  auto session = llm_.session("classify/" + hex64(fnv1a64(text)));
  const auto prompt = render_template(template_, {{"text", text}});
  const auto parse = [](const std::string& reply) {
    auto yn = parse_leading_yes_no(reply);
    if (!yn) throw RetryableParseError("reply does not start with Yes or No");
    return *yn;
  };
  try {
    const bool yes = ask_parsed(session, prompt, reprompt_, llm_.params, parse);
    return {yes ? PanicClass::Panic : PanicClass::NoPanic, yes ? 1.0 : 0.0};
  } catch (const ParseError& e) {
    throw ClassificationUnavailable(e.what());
  }
}

ExternalClassifier::ExternalClassifier(std::string endpoint, double timeout_s) : endpoint_(std::move(endpoint)) {
  poster_ = [timeout_s](const std::string& url, const std::string& body) {
    return http_post_json(url, body, "", timeout_s);
  };
}

ExternalClassifier::ExternalClassifier(std::string endpoint, Poster poster)
    : endpoint_(std::move(endpoint)), poster_(std::move(poster)) {}

PanicLabel ExternalClassifier::classify(const std::string& text) {
  const auto result = poster_(endpoint_, json{{"text", text}}.dump());
  if (result.status != 200) {
    throw ClassificationUnavailable("classifier service returned status " + std::to_string(result.status) +
                                    (result.error.empty() ? "" : ": " + result.error));
  }
  try {
    const auto j = json::parse(result.body);
    auto cls = parse_panic_class(j.at("label").get<std::string>());
    if (!cls) throw ClassificationUnavailable("classifier service returned an unknown label");
    const double score = j.at("score").get<double>();
    if (score < 0 || score > 1) throw ClassificationUnavailable("classifier service score out of range");
    return {*cls, score};
  } catch (const json::exception& e) {
    throw ClassificationUnavailable(std::string("classifier service payload: ") + e.what());
  }
}

PanicLabel veto_aggregate(const std::vector<PanicLabel>& labels) {
  if (labels.empty()) throw DataError("veto over an empty label list");
  PanicLabel out{PanicClass::NoPanic, 0.0};
  for (const auto& l : labels) {
    if (l.is_panic()) out.label = PanicClass::Panic;
    out.score = std::max(out.score, l.score);
  }
  return out;
}

std::optional<UserPrediction> predict_user(const StageTrace& trace, PanicClassifier& classifier) {
  if (!trace.predictable() || trace.tweets.empty() || !trace.panic) return std::nullopt;
  std::vector<PanicLabel> labels;
  for (const auto& t : trace.tweets) labels.push_back(classifier.classify(t.text));
  return UserPrediction{trace.user_id, veto_aggregate(labels), trace.panic->probability};
}

PanicLabel label_from_posts(const UserTimeline& timeline, PanicClassifier& classifier) {
  std::vector<PanicLabel> labels;
  for (const auto& p : timeline.post_posts) labels.push_back(classifier.classify(p.text));
  return veto_aggregate(labels);
}

}  // namespace panicsim
