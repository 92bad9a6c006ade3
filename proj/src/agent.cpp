#include "panicsim/agent.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

PsychKnowledge PsychKnowledge::parse(const std::string& markdown) {
  PsychKnowledge k;
  std::istringstream in(markdown);
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("## ")) {
      k.sections.emplace_back(trim(line.substr(3)), "");
    } else if (!k.sections.empty()) {
      auto& body = k.sections.back().second;
      if (!body.empty() || !trim(line).empty()) body += line + "\n";
    }
  }
  for (auto& [title, body] : k.sections) {
    while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
    if (body.empty()) throw DataError("knowledge section '" + title + "' is empty");
  }
  if (k.sections.size() != 6) {
    throw DataError("psychological knowledge must have 6 sections, found " + std::to_string(k.sections.size()));
  }
  return k;
}

PsychKnowledge PsychKnowledge::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

std::string PsychKnowledge::render() const {
  std::string out;
  for (const auto& [title, body] : sections) out += "\n### " + title + "\n" + body + "\n";
  return out;
}

std::string_view to_string(ToneBand band) {
  switch (band) {
    case ToneBand::Panicked: return "Panicked";
    case ToneBand::Calm: return "Calm";
    default: return "Neutral";
  }
}

ToneBand tone_band(double p, double calm_below, double panic_above) {
  if (p > panic_above) return ToneBand::Panicked;
  if (p < calm_below) return ToneBand::Calm;
  return ToneBand::Neutral;
}

std::string format_percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::round(p * 10000.0) / 100.0);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

namespace {

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

}  // namespace

std::string render_user_info(const UserProfile& p) {
  ojson j;
  ojson personality;
  for (std::size_t t = 0; t < 5; ++t) personality[std::string(to_string(kTraits[t]))] = round_to(p.personality.values[t], 3);
  j["personality"] = personality;
  if (p.flags.count("sentiment_unavailable")) {
    j["sentiment"] = "unavailable";
  } else {
    j["sentiment"] = {{"positive", format_percent(p.sentiment.positive) + "%"},
                      {"neutral", format_percent(p.sentiment.neutral) + "%"},
                      {"negative", format_percent(p.sentiment.negative) + "%"}};
  }
  std::vector<std::string> top;
  for (std::size_t i = 0; i < p.themes.top_themes.size() && i < 3; ++i) top.push_back(p.themes.top_themes[i]);
  j["top_themes"] = top;
  if (p.tone) {
    j["tone"] = std::vector<std::string>(p.tone->words.begin(), p.tone->words.end());
  } else {
    j["tone"] = "unavailable";
  }
  ojson risk;
  risk["followers"] = p.risk_comm.follower_count;
  risk["followees"] = p.risk_comm.followee_count;
  risk["posts_per_day"] = round_to(p.risk_comm.posts_per_day, 2);
  if (p.risk_comm.distance_to_track_km) {
    risk["distance_to_track_km"] = round_to(*p.risk_comm.distance_to_track_km, 1);
  } else {
    risk["distance_to_track_km"] = "unavailable";
  }
  j["risk_communication"] = risk;
  j["relevant_posts"] = p.relevant_posts;
  return j.dump(2);
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Completed: return "completed";
    case Outcome::InvalidQuestionnaire: return "invalid-questionnaire";
    case Outcome::ProviderRefused: return "provider-refused";
    case Outcome::UnverifiedAccepted: return "unverified-accepted";
    default: return "failed";
  }
}

Outcome parse_outcome(std::string_view text) {
  for (auto o : {Outcome::Completed, Outcome::InvalidQuestionnaire, Outcome::ProviderRefused,
                 Outcome::UnverifiedAccepted, Outcome::Failed}) {
    if (to_string(o) == text) return o;
  }
  throw DataError("unknown outcome '" + std::string(text) + "'");
}

namespace {

json verdict_json(const ExpertVerdict& v) {
  json j;
  for (auto e : kExperts) j[std::string(to_string(e))] = {{"pass", v[e].pass}, {"reason", v[e].reason}};
  return j;
}

ExpertVerdict verdict_from(const json& j) {
  ExpertVerdict v;
  for (auto e : kExperts) {
    const auto& o = j.at(std::string(to_string(e)));
    v[e] = {o.at("pass").get<bool>(), o.at("reason").get<std::string>()};
  }
  return v;
}

}  // namespace

json to_json(const StageTrace& t) {
  json j;
  j["user_id"] = t.user_id;
  j["outcome"] = std::string(to_string(t.outcome));
  j["reason"] = t.reason;
  j["attempts"] = t.attempts;
  j["retries"] = t.retries();
  if (t.ppdts) {
    json scores = json::object(), reasons = json::object();
    for (const auto& [id, s] : t.ppdts->scores) scores[std::to_string(id)] = s;
    for (const auto& [id, r] : t.ppdts->reasons) reasons[std::to_string(id)] = r;
    j["ppdts"] = {{"answered_count", t.ppdts->answered_count},
                  {"valid", t.ppdts->valid},
                  {"scores", scores},
                  {"reasons", reasons}};
  } else {
    j["ppdts"] = nullptr;
  }
  if (t.factors) {
    json f;
    for (auto a : kArousalFactors) f[std::string(to_string(a))] = {{"score", (*t.factors)[a].score}, {"reason", (*t.factors)[a].reason}};
    j["arousal"] = f;
  } else {
    j["arousal"] = nullptr;
  }
  if (t.panic) {
    j["panic"] = {{"probability", t.panic->probability},
                  {"source", t.panic->source == ProbabilitySource::LlmReported ? "llm-reported" : "fallback-formula"}};
  } else {
    j["panic"] = nullptr;
  }
  json tweets = json::array();
  for (const auto& c : t.tweets) {
    tweets.push_back({{"text", c.text}, {"hashtags", c.hashtags}, {"verified", c.verified}, {"attempt", c.attempt}});
  }
  j["tweets"] = tweets;
  j["verdict"] = t.verdict ? verdict_json(*t.verdict) : json(nullptr);
  json history = json::array();
  for (const auto& v : t.verdict_history) history.push_back(v ? verdict_json(*v) : json(nullptr));
  j["verdict_history"] = history;
  json ex = json::array();
  for (const auto& e : t.exchanges) {
    ex.push_back({{"stage", e.stage}, {"session", e.session}, {"turn", e.turn}, {"prompt", e.prompt}, {"reply", e.reply}});
  }
  j["exchanges"] = ex;
  return j;
}

StageTrace trace_from_json(const json& j) {
  StageTrace t;
  t.user_id = j.at("user_id").get<std::string>();
  t.outcome = parse_outcome(j.at("outcome").get<std::string>());
  t.reason = j.value("reason", "");
  t.attempts = j.value("attempts", 0);
  if (!j.at("ppdts").is_null()) {
    PpdtsResponse r;
    const auto& p = j.at("ppdts");
    for (const auto& [k, v] : p.at("scores").items()) r.scores[std::stoi(k)] = v.get<int>();
    for (const auto& [k, v] : p.at("reasons").items()) r.reasons[std::stoi(k)] = v.get<std::string>();
    r.answered_count = p.at("answered_count").get<int>();
    r.valid = p.at("valid").get<bool>();
    t.ppdts = r;
  }
  if (!j.at("arousal").is_null()) {
    ArousalFactors f;
    for (auto a : kArousalFactors) {
      const auto& o = j.at("arousal").at(std::string(to_string(a)));
      f[a] = {o.at("score").get<int>(), o.at("reason").get<std::string>()};
    }
    t.factors = f;
  }
  if (!j.at("panic").is_null()) {
    const auto& p = j.at("panic");
    t.panic = PanicAssessment{p.at("probability").get<double>(), p.at("source").get<std::string>() == "llm-reported"
                                                                     ? ProbabilitySource::LlmReported
                                                                     : ProbabilitySource::FallbackFormula};
  }
  for (const auto& c : j.at("tweets")) {
    t.tweets.push_back({c.at("text").get<std::string>(), c.at("hashtags").get<std::vector<std::string>>(),
                        c.at("verified").get<bool>(), c.at("attempt").get<int>()});
  }
  if (!j.at("verdict").is_null()) t.verdict = verdict_from(j.at("verdict"));
  for (const auto& v : j.value("verdict_history", json::array())) {
    t.verdict_history.push_back(v.is_null() ? std::nullopt : std::optional<ExpertVerdict>(verdict_from(v)));
  }
  for (const auto& e : j.value("exchanges", json::array())) {
    t.exchanges.push_back({e.at("stage").get<std::string>(), e.at("session").get<std::string>(),
                           e.at("turn").get<std::size_t>(), e.at("prompt").get<std::string>(),
                           e.at("reply").get<std::string>()});
  }
  return t;
}

void AgentConfig::validate() const {
  analysis.validate();
  generation.validate();
  if (tweets_n < 1) throw ConfigError("tweets_n must be at least 1");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (validity_min < 1 || validity_min > 18) throw ConfigError("validity_min must be in 1..18");
  if (!(0 <= calm_below && calm_below <= panic_above && panic_above <= 1))
    throw ConfigError("tone bands need 0 <= calm_below <= panic_above <= 1");
  if (reprompts < 0) throw ConfigError("reprompts must be non-negative");
}

std::string render_stage1(const PsychKnowledge& knowledge, const DisasterContext& disaster, const UserProfile& profile,
                          const TemplateSet& templates) {
  return templates.render("stage1_perception", {{"psychology", knowledge.render()},
                                                {"hurricane_table", render_disaster_table(disaster)},
                                                {"user_info", render_user_info(profile)}});
}

std::string render_stage2(const std::vector<PpdtsItem>& items, const TemplateSet& templates) {
  return templates.render("stage2_risk_perception", {{"questions", render_ppdts_questions(items)}});
}

std::string render_stage3(const TemplateSet& templates) { return templates.render("stage3_panic_arousal", {}); }

std::string render_generation(double p_panic, int n, const TemplateSet& templates, double calm_below,
                              double panic_above) {
  std::string prompt = templates.render(
      "stage4_generation", {{"panic_probability", format_percent(p_panic)}, {"tweet_count", std::to_string(n)}});
  switch (tone_band(p_panic, calm_below, panic_above)) {
    case ToneBand::Panicked: prompt += "\n" + templates.get("band_panicked"); break;
    case ToneBand::Calm: prompt += "\n" + templates.get("band_calm"); break;
    default: break;
  }
  return prompt;
}

std::string render_feedback(const std::optional<ExpertVerdict>& verdict, const TemplateSet& templates) {
  static const std::array<const char*, 4> names = {"Psychological", "Linguistic", "Factual", "Panic"};
  std::string lines;
  if (!verdict) {
    lines = "- Evaluation: the evaluators could not read the previous tweet in the required format";
  } else {
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& o = verdict->opinions[i];
      if (o.pass) continue;
      if (!lines.empty()) lines += "\n";
      lines += std::string("- ") + names[i] + ": " + (o.reason.empty() ? "rejected" : o.reason);
    }
  }
  return templates.render("feedback", {{"feedback", lines}});
}

std::string render_expert(const UserProfile& profile, const DisasterContext& disaster, double p_panic,
                          const std::vector<TweetCandidate>& tweets, const TemplateSet& templates) {
  std::vector<std::string> texts;
  for (const auto& t : tweets) texts.push_back(t.text);
  return templates.render("stage4_expert_review", {{"user_info", render_user_info(profile)},
                                                   {"hurricane_table", render_disaster_table(disaster)},
                                                   {"tweet", join(texts, "\n")},
                                                   {"panic_probability", format_percent(p_panic)}});
}

std::string administer_ppdts(AgentSession& session, const std::vector<PpdtsItem>& items, const TemplateSet& templates,
                             const GenerationParams& params) {
  return session.complete(ChatMessage::user(render_stage2(items, templates)), params);
}

std::string run_arousal(AgentSession& session, const TemplateSet& templates, const GenerationParams& params) {
  return session.complete(ChatMessage::user(render_stage3(templates)), params);
}

std::string generate_tweets(AgentSession& session, const std::string& prompt, const GenerationParams& params) {
  return session.complete(ChatMessage::user(prompt), params);
}

ExpertVerdict verify_tweets(AgentSession& expert_session, const UserProfile& profile, const DisasterContext& disaster,
                            double p_panic, const std::vector<TweetCandidate>& tweets, const TemplateSet& templates,
                            const GenerationParams& params) {
  if (tweets.empty()) throw GenerationParseError("nothing to verify");
  const auto reply = expert_session.complete(
      ChatMessage::user(render_expert(profile, disaster, p_panic, tweets, templates)), params);
  return parse_verdict(reply);
}

namespace {

// Appends the prompt/reply pairs a session gained since `from` (a history index).
void record(std::vector<Exchange>* out, const std::string& stage, const AgentSession& session, std::size_t from) {
  if (!out) return;
  const auto& h = session.history();
  std::size_t turn = session.turns() - (h.size() - from) / 2;
  for (std::size_t i = from; i + 1 < h.size(); i += 2) {
    out->push_back({stage, session.tag(), turn++, h[i].content, h[i + 1].content});
  }
}

}  // namespace

VerifiedGeneration retry_verified_generation(AgentSession& session, const LlmHandle& llm, const UserProfile& profile,
                                             const AgentAssets& assets, double p_panic, const AgentConfig& config,
                                             std::vector<Exchange>* exchanges) {
  const auto& templates = assets.templates;
  const std::string base = render_generation(p_panic, config.tweets_n, templates, config.calm_below, config.panic_above);
  const std::string reprompt = templates.get("reprompt");
  VerifiedGeneration g;
  std::string prompt = base;
  for (int attempt = 1; attempt <= 1 + config.max_retries; ++attempt) {
    g.attempts = attempt;
    const auto mark = session.history().size();
    const auto parse = [&](const std::string& reply) { return parse_tweets(reply, config.tweets_n); };
    std::vector<TweetCandidate> tweets;
    try {
      tweets = ask_parsed(session, prompt, reprompt, config.generation, parse, config.reprompts);
    } catch (...) {
      record(exchanges, "generation", session, mark);
      throw;
    }
    record(exchanges, "generation", session, mark);
    for (auto& t : tweets) t.attempt = attempt;

    auto expert = llm.session(profile.user_id + "/expert/" + std::to_string(attempt));
    std::optional<ExpertVerdict> verdict;
    try {
      verdict = verify_tweets(expert, profile, assets.disaster, p_panic, tweets, templates, config.analysis);
    } catch (const VerdictParseError&) {
    }
    record(exchanges, "verification", expert, 0);
    g.history.push_back(verdict);
    g.tweets = std::move(tweets);
    g.verdict = verdict;
    if (verdict && verdict->passed()) {
      g.verified = true;
      for (auto& t : g.tweets) t.verified = true;
      return g;
    }
    prompt = base + "\n\n" + render_feedback(verdict, templates);
  }
  return g;
}

StageTrace run_user_pipeline(const UserProfile& profile, const AgentAssets& assets, const LlmHandle& llm,
                             const AgentConfig& config) {
  StageTrace trace;
  trace.user_id = profile.user_id;
  auto session = llm.session(profile.user_id);
  const auto& templates = assets.templates;
  std::string stage = "perception";
  try {
    const auto stage1 = render_stage1(assets.knowledge, assets.disaster, profile, templates);
    session.complete(ChatMessage::user(stage1), config.analysis);
    record(&trace.exchanges, stage, session, 0);

    stage = "risk_perception";
    auto mark = session.history().size();
    const auto sheet = administer_ppdts(session, assets.items, templates, config.analysis);
    record(&trace.exchanges, stage, session, mark);
    trace.ppdts = parse_ppdts(sheet, config.validity_min, static_cast<int>(assets.items.size()));
    if (!trace.ppdts->valid) {
      trace.outcome = Outcome::InvalidQuestionnaire;
      trace.reason = "questionnaire answered " + std::to_string(trace.ppdts->answered_count) + " of " +
                     std::to_string(assets.items.size()) + " items";
      return trace;
    }

    stage = "panic_arousal";
    mark = session.history().size();
    ArousalReading reading;
    try {
      reading = ask_parsed(session, render_stage3(templates), templates.get("reprompt"), config.analysis, parse_arousal,
                           config.reprompts);
    } catch (...) {
      record(&trace.exchanges, stage, session, mark);
      throw;
    }
    record(&trace.exchanges, stage, session, mark);
    trace.factors = reading.factors;
    trace.panic = reading.reported_probability
                      ? PanicAssessment{*reading.reported_probability, ProbabilitySource::LlmReported}
                      : PanicAssessment{fallback_probability(reading.factors), ProbabilitySource::FallbackFormula};

    stage = "posting_response";
    auto g = retry_verified_generation(session, llm, profile, assets, trace.panic->probability, config,
                                       &trace.exchanges);
    trace.tweets = std::move(g.tweets);
    trace.verdict = std::move(g.verdict);
    trace.verdict_history = std::move(g.history);
    trace.attempts = g.attempts;
    if (g.verified) {
      trace.outcome = Outcome::Completed;
    } else {
      trace.outcome = Outcome::UnverifiedAccepted;
      trace.reason = "verification failed on all " + std::to_string(g.attempts) + " attempts";
    }
  } catch (const ProviderRefusal& e) {
    trace.outcome = Outcome::ProviderRefused;
    trace.reason = stage + ": " + e.what();
  } catch (const ParseError& e) {
    trace.outcome = Outcome::Failed;
    trace.reason = stage + ": " + e.what();
  } catch (const Error& e) {
    trace.outcome = Outcome::Failed;
    trace.reason = stage + ": " + e.what();
  }
  return trace;
}

}  // namespace panicsim
