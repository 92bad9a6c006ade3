#include "panicsim/profile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <sstream>

#include "panicsim/errors.hpp"
#include "panicsim/retrieval.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/templates.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

PersonalityVector LexiconPersonalityScorer::score(const std::string&, const std::vector<std::string>& texts) {
  std::array<double, 5> sums{};
  std::size_t tokens = 0;
  for (const auto& text : texts) {
    for (const auto& token : word_tokens(text)) {
      ++tokens;
      if (const auto* w = lexicon_.find(token)) {
        for (std::size_t t = 0; t < 5; ++t) sums[t] += (*w)[t];
      }
    }
  }
  PersonalityVector out;
  if (tokens == 0) return out;
  for (std::size_t t = 0; t < 5; ++t) {
    out.values[t] = 0.5 + 0.5 * std::tanh(gain_ * sums[t] / static_cast<double>(tokens));
  }
  return out;
}

PersonalityVector parse_personality_reply(const std::string& reply) {
  static const std::regex line_re(R"(^\W*([A-Za-z]+)\W*\s*[:=]\s*\**\s*([0-9]*\.?[0-9]+))");
  std::array<bool, 5> seen{};
  PersonalityVector out;
  std::istringstream in(reply);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_search(line, m, line_re)) continue;
    auto trait = parse_trait(m[1].str());
    if (!trait) continue;
    const double v = std::stod(m[2].str());
    if (v < 0 || v > 1) throw RetryableParseError("trait score out of range: " + line);
    const auto t = static_cast<std::size_t>(*trait);
    if (seen[t]) continue;
    seen[t] = true;
    out.values[t] = v;
  }
  for (std::size_t t = 0; t < 5; ++t) {
    if (!seen[t]) throw RetryableParseError("personality reply lacks " + std::string(to_string(kTraits[t])));
  }
  return out;
}

namespace {

std::string json_texts(const std::vector<std::string>& texts) { return json(texts).dump(); }

}  // namespace

PersonalityVector LlmPersonalityScorer::score(const std::string& tag, const std::vector<std::string>& texts) {
  auto session = llm_.session(tag);
  const auto prompt = render_template(template_, {{"posts", json_texts(texts)}});
  return ask_parsed(session, prompt, reprompt_, llm_.params, parse_personality_reply);
}

ExternalPersonalityScorer::ExternalPersonalityScorer(std::string endpoint, double timeout_s)
    : endpoint_(std::move(endpoint)) {
  poster_ = [timeout_s](const std::string& url, const std::string& body) {
    return http_post_json(url, body, "", timeout_s);
  };
}

ExternalPersonalityScorer::ExternalPersonalityScorer(std::string endpoint, Poster poster)
    : endpoint_(std::move(endpoint)), poster_(std::move(poster)) {}

PersonalityVector ExternalPersonalityScorer::score(const std::string&, const std::vector<std::string>& texts) {
  const auto result = poster_(endpoint_, json{{"texts", texts}}.dump());
  if (result.status != 200) {
    throw ProtocolError("personality service returned status " + std::to_string(result.status) +
                        (result.error.empty() ? "" : ": " + result.error));
  }
  PersonalityVector out;
  try {
    const auto j = json::parse(result.body);
    for (std::size_t t = 0; t < 5; ++t) {
      const double v = j.at(std::string(to_string(kTraits[t]))).get<double>();
      if (v < 0 || v > 1) throw ProtocolError("personality service score out of range");
      out.values[t] = v;
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("personality service payload: ") + e.what());
  }
  return out;
}

ConsistencyResult check_personality_consistency(const std::vector<std::string>& texts, PersonalityScorer& scorer,
                                                double float_range, const std::string& tag) {
  if (texts.size() < 2) throw InsufficientData("consistency check needs at least two posts");
  std::vector<std::string> even, odd;
  for (std::size_t i = 0; i < texts.size(); ++i) (i % 2 == 0 ? even : odd).push_back(texts[i]);
  const auto a = scorer.score(tag + "/a", even);
  const auto b = scorer.score(tag + "/b", odd);
  ConsistencyResult r;
  for (std::size_t t = 0; t < 5; ++t) {
    r.deltas[t] = std::abs(a.values[t] - b.values[t]);
    if (r.deltas[t] > float_range) r.consistent = false;
  }
  return r;
}

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::Positive: return "positive";
    case Sentiment::Negative: return "negative";
    default: return "neutral";
  }
}

Sentiment LexiconSentimentClassifier::classify(const std::string&, const std::string& text) {
  int balance = 0;
  for (const auto& token : word_tokens(text)) {
    if (auto w = lexicon_.find(token)) balance += (*w > 0) - (*w < 0);
  }
  if (balance > 0) return Sentiment::Positive;
  if (balance < 0) return Sentiment::Negative;
  return Sentiment::Neutral;
}

Sentiment parse_sentiment_reply(const std::string& reply) {
  const auto words = word_tokens(reply);
  if (!words.empty()) {
    if (words[0] == "positive") return Sentiment::Positive;
    if (words[0] == "negative") return Sentiment::Negative;
    if (words[0] == "neutral") return Sentiment::Neutral;
  }
  throw RetryableParseError("sentiment reply must start with positive, neutral or negative");
}

Sentiment LlmSentimentClassifier::classify(const std::string& tag, const std::string& text) {
  auto session = llm_.session(tag);
  const auto prompt = render_template(template_, {{"text", text}});
  return ask_parsed(session, prompt, reprompt_, llm_.params, parse_sentiment_reply);
}

SentimentTrend sentiment_trend(const std::string& user_id, const std::vector<RawPost>& posts,
                               SentimentClassifier& classifier) {
  if (posts.empty()) throw FeatureUnavailable(user_id, "sentiment:" + classifier.name(), "no posts");
  SentimentTrend trend;
  std::map<std::int64_t, DailySentiment> days;
  int pos = 0, neu = 0, neg = 0;
  for (const auto& p : posts) {
    const auto s = classifier.classify(user_id + "/sentiment/" + p.post_id, p.text);
    std::int64_t day = p.timestamp / 86400;
    if (p.timestamp < 0 && p.timestamp % 86400 != 0) --day;
    auto& d = days[day];
    d.day = day;
    switch (s) {
      case Sentiment::Positive: ++pos; ++d.positive; break;
      case Sentiment::Negative: ++neg; ++d.negative; break;
      default: ++neu; ++d.neutral; break;
    }
  }
  const auto n = static_cast<double>(posts.size());
  trend.positive = pos / n;
  trend.neutral = neu / n;
  trend.negative = neg / n;
  for (const auto& [day, d] : days) trend.daily.push_back(d);
  return trend;
}

ToneTriple parse_tone(const std::string& reply) {
  std::string text = trim(reply);
  while (!text.empty() && (text.back() == '.' || text.back() == '"' || text.back() == '\'')) text.pop_back();
  while (!text.empty() && (text.front() == '"' || text.front() == '\'')) text.erase(0, 1);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.push_back(trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) throw RetryableParseError("tone reply must have exactly three words: '" + reply + "'");
  ToneTriple tone;
  for (std::size_t i = 0; i < 3; ++i) {
    if (parts[i].empty() || parts[i].find_first_of(" \t\r\n") != std::string::npos)
      throw RetryableParseError("tone reply must have exactly three words: '" + reply + "'");
    tone.words[i] = parts[i];
  }
  return tone;
}

ToneTriple extract_tone(const std::string& user_id, const std::vector<std::string>& texts, const LlmHandle& llm,
                        const std::string& prompt_template, const std::string& reprompt) {
  auto session = llm.session(user_id + "/tone");
  const auto prompt = render_template(prompt_template, {{"posts", json_texts(texts)}});
  try {
    return ask_parsed(session, prompt, reprompt, llm.params, parse_tone);
  } catch (const ParseError& e) {
    throw ToneUnavailable(e.what());
  }
}

double posts_per_day(const std::vector<RawPost>& pre_posts, std::int64_t disaster_time) {
  if (pre_posts.empty()) return 0;
  const double days = static_cast<double>(disaster_time - pre_posts.front().timestamp) / 86400.0;
  return static_cast<double>(pre_posts.size()) / std::max(1.0, days);
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

json to_json(const UserProfile& p) {
  json personality;
  for (std::size_t t = 0; t < 5; ++t) personality[std::string(to_string(kTraits[t]))] = p.personality.values[t];
  json daily = json::array();
  for (const auto& d : p.sentiment.daily) {
    daily.push_back({{"day", d.day}, {"positive", d.positive}, {"neutral", d.neutral}, {"negative", d.negative}});
  }
  json j;
  j["user_id"] = p.user_id;
  j["personality"] = personality;
  j["sentiment"] = {{"positive", p.sentiment.positive},
                    {"neutral", p.sentiment.neutral},
                    {"negative", p.sentiment.negative},
                    {"daily", daily}};
  j["topic_weights"] = vector_json(p.topic_weights);
  j["themes"] = {{"weights", vector_json(p.themes.weights)}, {"top_themes", p.themes.top_themes}};
  if (p.tone) {
    j["tone"] = std::vector<std::string>(p.tone->words.begin(), p.tone->words.end());
  } else {
    j["tone"] = "unavailable";
  }
  j["risk_comm"] = {{"follower_count", p.risk_comm.follower_count},
                    {"followee_count", p.risk_comm.followee_count},
                    {"posts_per_day", p.risk_comm.posts_per_day},
                    {"distance_to_track_km", p.risk_comm.distance_to_track_km
                                                 ? json(*p.risk_comm.distance_to_track_km)
                                                 : json(nullptr)}};
  j["relevant_posts"] = p.relevant_posts;
  j["flags"] = p.flags;
  return j;
}

UserProfile profile_from_json(const json& j) {
  UserProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  for (std::size_t t = 0; t < 5; ++t)
    p.personality.values[t] = j.at("personality").at(std::string(to_string(kTraits[t]))).get<double>();
  const auto& s = j.at("sentiment");
  p.sentiment.positive = s.at("positive").get<double>();
  p.sentiment.neutral = s.at("neutral").get<double>();
  p.sentiment.negative = s.at("negative").get<double>();
  for (const auto& d : s.at("daily")) {
    p.sentiment.daily.push_back({d.at("day").get<std::int64_t>(), d.at("positive").get<int>(),
                                 d.at("neutral").get<int>(), d.at("negative").get<int>()});
  }
  p.topic_weights = vector_from_json(j.at("topic_weights"));
  p.themes.weights = vector_from_json(j.at("themes").at("weights"));
  p.themes.top_themes = j.at("themes").at("top_themes").get<std::vector<std::string>>();
  if (j.at("tone").is_array()) {
    const auto words = j.at("tone").get<std::vector<std::string>>();
    if (words.size() != 3) throw DataError("profile tone must have three words");
    p.tone = ToneTriple{{words[0], words[1], words[2]}};
  }
  const auto& r = j.at("risk_comm");
  p.risk_comm.follower_count = r.at("follower_count").get<std::uint64_t>();
  p.risk_comm.followee_count = r.at("followee_count").get<std::uint64_t>();
  p.risk_comm.posts_per_day = r.at("posts_per_day").get<double>();
  if (!r.at("distance_to_track_km").is_null()) p.risk_comm.distance_to_track_km = r.at("distance_to_track_km").get<double>();
  p.relevant_posts = j.at("relevant_posts").get<std::vector<std::string>>();
  p.flags = j.at("flags").get<std::set<std::string>>();
  return p;
}

UserProfile build_profile(const UserTimeline& timeline, const ProfileContext& ctx) {
  UserProfile p;
  p.user_id = timeline.user_id;
  const auto& posts = timeline.pre_posts;
  std::vector<std::string> texts;
  for (const auto& post : posts) texts.push_back(post.text);

  if (ctx.personality) {
    try {
      p.personality = ctx.personality->score(p.user_id + "/personality", texts);
    } catch (const Error&) {
      p.flags.insert("personality_unavailable");
    }
  } else {
    p.flags.insert("personality_unavailable");
  }

  if (ctx.sentiment) {
    try {
      p.sentiment = sentiment_trend(p.user_id, posts, *ctx.sentiment);
    } catch (const Error&) {
      p.flags.insert("sentiment_unavailable");
    }
  } else {
    p.flags.insert("sentiment_unavailable");
  }

  if (ctx.topics && ctx.themes && ctx.stopwords) {
    std::vector<std::vector<std::string>> tokenized;
    for (const auto& t : texts) tokenized.push_back(topic_tokens(t, *ctx.stopwords));
    const auto inference =
        infer_topics(*ctx.topics, tokenized, ctx.infer_iterations, ctx.seed ^ fnv1a64(p.user_id));
    p.topic_weights = inference.theta;
    if (inference.out_of_vocabulary) p.flags.insert("topics_out_of_vocabulary");
    p.themes = theme_profile(*ctx.themes, p.topic_weights);
  } else {
    p.flags.insert("topics_unavailable");
  }

  if (ctx.tone_llm) {
    try {
      p.tone = extract_tone(p.user_id, texts, *ctx.tone_llm, ctx.tone_template, ctx.reprompt);
    } catch (const Error&) {
      p.flags.insert("tone_unavailable");
    }
  } else {
    p.flags.insert("tone_unavailable");
  }

  if (!posts.empty()) {
    p.risk_comm.follower_count = posts.back().follower_count;
    p.risk_comm.followee_count = posts.back().followee_count;
  }
  p.risk_comm.posts_per_day = posts_per_day(posts, ctx.disaster_time);
  const RawPost* located = nullptr;
  for (const auto& post : posts) {
    if (post.has_coordinates()) located = &post;
  }
  if (located && ctx.disaster) {
    p.risk_comm.distance_to_track_km =
        nearest_track_distance_km(*ctx.disaster, *located->latitude, *located->longitude);
  }
  if (!p.risk_comm.distance_to_track_km) p.flags.insert("distance_unavailable");

  for (const auto& post : retrieve_relevant(posts, ctx.query_terms, ctx.relevant_k)) p.relevant_posts.push_back(post.text);
  return p;
}

}  // namespace panicsim
