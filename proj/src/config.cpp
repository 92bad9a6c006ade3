#include "panicsim/config.hpp"

#include <set>

#include "panicsim/disaster.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"

namespace panicsim {

using json = nlohmann::json;

namespace {

void check_choice(const std::string& key, const std::string& value, const std::set<std::string>& allowed) {
  if (!allowed.count(value)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(key + " must be one of " + list + " (got '" + value + "')");
  }
}

void check_range(const std::string& key, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi))
    throw ConfigError(key + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

json params_json(const GenerationParams& p) {
  json j{{"temperature", p.temperature}, {"max_tokens", p.max_tokens}, {"model_id", p.model_id}};
  j["repetition_penalty"] = p.repetition_penalty ? json(*p.repetition_penalty) : json(nullptr);
  return j;
}

GenerationParams params_from(const json& j, GenerationParams p) {
  p.temperature = j.value("temperature", p.temperature);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.model_id = j.value("model_id", p.model_id);
  if (j.contains("repetition_penalty")) {
    p.repetition_penalty =
        j["repetition_penalty"].is_null() ? std::nullopt : std::optional<double>(j["repetition_penalty"].get<double>());
  }
  return p;
}

std::int64_t time_from(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return parse_utc_time(j.get<std::string>());
  throw ConfigError("disaster_time must be epoch seconds or a UTC timestamp string");
}

std::string opt_path(const std::optional<std::filesystem::path>& p) { return p ? p->generic_string() : ""; }

void flatten(const json& value, const std::string& prefix, std::map<std::string, json>& out) {
  if (value.is_object() && !value.empty()) {
    for (const auto& [k, v] : value.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out[prefix] = value;
  }
}

}  // namespace

void RunConfig::validate() const {
  check_range("corpus.dedup_threshold", dedup_threshold, 0, 1);
  check_range("corpus.split_ratio", split_ratio, 0, 1);
  check_range("corpus.max_malformed_fraction", max_malformed_fraction, 0, 1);
  if (min_tokens < 0) throw ConfigError("corpus.min_tokens must be >= 0");
  if (min_pre_posts < 0) throw ConfigError("corpus.min_pre_posts must be >= 0");
  if (max_in_flight < 1 || max_in_flight > 1024) throw ConfigError("max_in_flight must be in [1, 1024]");
  check_choice("backends.personality", personality_backend, {"lexicon", "llm", "external"});
  check_choice("backends.sentiment", sentiment_backend, {"lexicon", "llm"});
  check_choice("backends.discriminator", discriminator_backend, {"rule", "llm", "external"});
  check_choice("backends.themes", theme_mode, {"static", "llm"});
  check_choice("backends.ground_truth", ground_truth_mode, {"labels", "posts"});
  if (personality_backend == "external" && personality_endpoint.empty())
    throw ConfigError("backends.personality_endpoint is required for the external personality backend");
  if (discriminator_backend == "external" && discriminator_endpoint.empty())
    throw ConfigError("backends.discriminator_endpoint is required for the external discriminator");
  if (provider) provider->validate();
  lda.validate();
  agent.validate();
  eda.validate();
  if (relevant_k < 1) throw ConfigError("profile.relevant_k must be >= 1");
}

std::filesystem::path RunConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return (base_dir / p).lexically_normal();
}

json RunConfig::to_json() const {
  json j;
  j["corpus"] = {{"posts", posts.generic_string()},
                 {"labels", opt_path(labels)},
                 {"disaster_time", disaster_time == 0 ? std::string() : format_utc_time(disaster_time)},
                 {"dedup_threshold", dedup_threshold},
                 {"min_tokens", min_tokens},
                 {"min_pre_posts", min_pre_posts},
                 {"split_ratio", split_ratio},
                 {"max_malformed_fraction", max_malformed_fraction}};
  j["disaster_context"] = disaster_context.generic_string();
  j["assets_dir"] = assets_dir.generic_string();
  j["out_dir"] = out_dir.generic_string();
  j["seed"] = seed;
  j["backends"] = {{"personality", personality_backend},
                   {"personality_endpoint", personality_endpoint},
                   {"sentiment", sentiment_backend},
                   {"discriminator", discriminator_backend},
                   {"discriminator_endpoint", discriminator_endpoint},
                   {"themes", theme_mode},
                   {"tone", tone},
                   {"ground_truth", ground_truth_mode}};
  if (provider) {
    json p;
    panicsim::to_json(p, *provider);
    j["provider"] = p;
  } else {
    j["provider"] = nullptr;
  }
  j["mock_script"] = opt_path(mock_script);
  j["max_in_flight"] = max_in_flight;
  j["lda"] = {{"topics", lda.topics},
              {"keywords_per_topic", lda.keywords_per_topic},
              {"iterations", lda.iterations},
              {"alpha", lda.effective_alpha()},
              {"beta", lda.beta}};
  j["agent"] = {{"analysis", params_json(agent.analysis)},
                {"generation", params_json(agent.generation)},
                {"tweets_n", agent.tweets_n},
                {"max_retries", agent.max_retries},
                {"validity_min", agent.validity_min},
                {"calm_below", agent.calm_below},
                {"panic_above", agent.panic_above},
                {"reprompts", agent.reprompts}};
  j["profile"] = {{"query_terms", query_terms}, {"relevant_k", relevant_k}};
  j["annotation"] = {{"human_rounds", opt_path(human_rounds)}, {"eda", eda.to_json()}};
  return j;
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    const auto corpus = j.value("corpus", json::object());
    c.posts = corpus.value("posts", "");
    if (auto l = corpus.value("labels", std::string()); !l.empty()) c.labels = l;
    if (corpus.contains("disaster_time")) c.disaster_time = time_from(corpus["disaster_time"]);
    c.dedup_threshold = corpus.value("dedup_threshold", c.dedup_threshold);
    c.min_tokens = corpus.value("min_tokens", c.min_tokens);
    c.min_pre_posts = corpus.value("min_pre_posts", c.min_pre_posts);
    c.split_ratio = corpus.value("split_ratio", c.split_ratio);
    c.max_malformed_fraction = corpus.value("max_malformed_fraction", c.max_malformed_fraction);

    c.disaster_context = j.value("disaster_context", "");
    c.assets_dir = j.value("assets_dir", "");
    c.out_dir = j.value("out_dir", c.out_dir.string());
    c.seed = j.value("seed", c.seed);

    const auto b = j.value("backends", json::object());
    c.personality_backend = b.value("personality", c.personality_backend);
    c.personality_endpoint = b.value("personality_endpoint", c.personality_endpoint);
    c.sentiment_backend = b.value("sentiment", c.sentiment_backend);
    c.discriminator_backend = b.value("discriminator", c.discriminator_backend);
    c.discriminator_endpoint = b.value("discriminator_endpoint", c.discriminator_endpoint);
    c.theme_mode = b.value("themes", c.theme_mode);
    c.tone = b.value("tone", c.tone);
    c.ground_truth_mode = b.value("ground_truth", c.ground_truth_mode);

    if (j.contains("provider") && !j["provider"].is_null()) c.provider = j["provider"].get<ProviderConfig>();
    if (auto m = j.value("mock_script", std::string()); !m.empty()) c.mock_script = m;
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);

    const auto lda = j.value("lda", json::object());
    c.lda.topics = lda.value("topics", c.lda.topics);
    c.lda.keywords_per_topic = lda.value("keywords_per_topic", c.lda.keywords_per_topic);
    c.lda.iterations = lda.value("iterations", c.lda.iterations);
    if (lda.contains("alpha") && !lda["alpha"].is_null()) c.lda.alpha = lda["alpha"].get<double>();
    c.lda.beta = lda.value("beta", c.lda.beta);

    const auto a = j.value("agent", json::object());
    c.agent.analysis = params_from(a.value("analysis", json::object()), c.agent.analysis);
    c.agent.generation = params_from(a.value("generation", json::object()), c.agent.generation);
    c.agent.tweets_n = a.value("tweets_n", c.agent.tweets_n);
    c.agent.max_retries = a.value("max_retries", c.agent.max_retries);
    c.agent.validity_min = a.value("validity_min", c.agent.validity_min);
    c.agent.calm_below = a.value("calm_below", c.agent.calm_below);
    c.agent.panic_above = a.value("panic_above", c.agent.panic_above);
    c.agent.reprompts = a.value("reprompts", c.agent.reprompts);

    const auto p = j.value("profile", json::object());
    c.query_terms = p.value("query_terms", c.query_terms);
    c.relevant_k = p.value("relevant_k", c.relevant_k);

    const auto an = j.value("annotation", json::object());
    if (auto h = an.value("human_rounds", std::string()); !h.empty()) c.human_rounds = h;
    if (an.contains("eda")) c.eda = EdaConfig::from_json(an["eda"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("cannot read config " + path.string());
  json raw;
  try {
    raw = read_json_file(path);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(raw, std::filesystem::absolute(path).parent_path());
}

json config_overrides(const RunConfig& config) {
  std::map<std::string, json> defaults, actual;
  flatten(RunConfig{}.to_json(), "", defaults);
  flatten(config.to_json(), "", actual);
  json out = json::object();
  for (const auto& [key, value] : actual) {
    auto it = defaults.find(key);
    const json def = it == defaults.end() ? json(nullptr) : it->second;
    if (def != value) out[key] = {{"default", def}, {"value", value}};
  }
  return out;
}

}  // namespace panicsim
