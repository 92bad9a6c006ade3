#include "panicsim/themes.hpp"

#include <algorithm>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "panicsim/jsonl.hpp"
#include "panicsim/templates.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

std::optional<int> theme_index(const std::string& name) {
  const std::string wanted = to_lower(trim(name));
  for (std::size_t i = 0; i < kThemeNames.size(); ++i) {
    if (to_lower(kThemeNames[i]) == wanted) return static_cast<int>(i);
  }
  // "and" spelled out instead of '&'
  for (std::size_t i = 0; i < kThemeNames.size(); ++i) {
    std::string alt = to_lower(kThemeNames[i]);
    if (auto pos = alt.find('&'); pos != std::string::npos) alt.replace(pos, 1, "and");
    if (alt == wanted) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::vector<int> ThemeMembership::assignment() const {
  std::vector<int> out;
  for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
    Eigen::Index m = 0;
    gamma.col(k).maxCoeff(&m);
    out.push_back(static_cast<int>(m));
  }
  return out;
}

ThemeMembership ThemeMembership::from_assignment(const std::vector<int>& assignment) {
  ThemeMembership tm;
  tm.theme_names.assign(kThemeNames.begin(), kThemeNames.end());
  tm.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kThemeNames.size()),
                                   static_cast<Eigen::Index>(assignment.size()));
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    const int m = assignment[k];
    if (m < 0 || m >= static_cast<int>(kThemeNames.size())) throw DataError("theme index out of range");
    tm.gamma(m, static_cast<Eigen::Index>(k)) = 1.0;
  }
  return tm;
}

json ThemeMembership::to_json() const {
  json topics = json::array();
  const auto a = assignment();
  for (std::size_t k = 0; k < a.size(); ++k) topics.push_back(theme_names[static_cast<std::size_t>(a[k])]);
  return json{{"themes", theme_names}, {"topic_themes", topics}};
}

ThemeMembership ThemeMembership::from_json(const json& j) {
  std::vector<int> a;
  for (const auto& name : j.at("topic_themes")) {
    auto idx = theme_index(name.get<std::string>());
    if (!idx) throw DataError("unknown theme '" + name.get<std::string>() + "'");
    a.push_back(*idx);
  }
  return from_assignment(a);
}

json StaticThemeConfig::to_json() const {
  json j;
  j["seed_keywords"] = seed_keywords;
  json a = json::object();
  for (const auto& [k, v] : assignments) a[std::to_string(k)] = v;
  j["assignments"] = a;
  return j;
}

StaticThemeConfig StaticThemeConfig::from_json(const json& j) {
  StaticThemeConfig c;
  for (const auto& [name, words] : j.at("seed_keywords").items()) {
    if (!theme_index(name)) throw ConfigError("unknown theme '" + name + "' in theme config");
    c.seed_keywords[name] = words.get<std::vector<std::string>>();
  }
  if (j.contains("assignments")) {
    for (const auto& [k, v] : j.at("assignments").items()) {
      const auto name = v.get<std::string>();
      if (!theme_index(name)) throw ConfigError("unknown theme '" + name + "' in theme config");
      c.assignments[std::stoi(k)] = name;
    }
  }
  return c;
}

StaticThemeConfig StaticThemeConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

int assign_theme(const std::vector<std::string>& keywords, const StaticThemeConfig& config) {
  const int misc = static_cast<int>(kThemeNames.size()) - 1;
  std::vector<double> score(kThemeNames.size(), 0.0);
  for (const auto& [name, seeds] : config.seed_keywords) {
    const std::set<std::string> seed_set(seeds.begin(), seeds.end());
    const auto m = static_cast<std::size_t>(*theme_index(name));
    for (std::size_t r = 0; r < keywords.size(); ++r) {
      if (seed_set.count(keywords[r])) score[m] += static_cast<double>(keywords.size() - r);
    }
  }
  int best = misc;
  double best_score = 0;
  for (std::size_t m = 0; m < score.size(); ++m) {
    if (score[m] > best_score) {
      best_score = score[m];
      best = static_cast<int>(m);
    }
  }
  return best;
}

ThemeMembership consolidate_static(const std::vector<std::vector<std::string>>& topic_keywords,
                                   const StaticThemeConfig& config) {
  std::vector<int> a;
  for (std::size_t k = 0; k < topic_keywords.size(); ++k) {
    if (auto it = config.assignments.find(static_cast<int>(k)); it != config.assignments.end()) {
      a.push_back(*theme_index(it->second));
    } else {
      a.push_back(assign_theme(topic_keywords[k], config));
    }
  }
  return ThemeMembership::from_assignment(a);
}

std::vector<int> parse_theme_assignment(const std::string& reply, int topics) {
  static const std::regex line_re(R"(^\W*topic\s*(\d+)\s*[:\-]\s*(.+?)\s*$)", std::regex::icase);
  std::vector<int> a(static_cast<std::size_t>(topics), -1);
  std::istringstream in(reply);
  std::string line;
  while (std::getline(in, line)) {
    std::erase(line, '*');
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    const int n = std::stoi(m[1].str());
    if (n < 1 || n > topics || a[static_cast<std::size_t>(n - 1)] >= 0) continue;
    auto idx = theme_index(m[2].str());
    if (!idx) throw RetryableParseError("unknown theme '" + m[2].str() + "' for topic " + std::to_string(n));
    a[static_cast<std::size_t>(n - 1)] = *idx;
  }
  for (int k = 0; k < topics; ++k) {
    if (a[static_cast<std::size_t>(k)] < 0)
      throw RetryableParseError("theme assignment is missing topic " + std::to_string(k + 1));
  }
  return a;
}

std::string render_topic_list(const std::vector<std::vector<std::string>>& topic_keywords) {
  std::string out;
  for (std::size_t k = 0; k < topic_keywords.size(); ++k) {
    out += "Topic " + std::to_string(k + 1) + ": " + join(topic_keywords[k], ", ") + "\n";
  }
  return out;
}

LlmThemeResult consolidate_llm(const std::vector<std::vector<std::string>>& topic_keywords,
                               const std::string& prompt_template, const std::string& reprompt,
                               std::shared_ptr<ChatProvider> provider,
                               std::shared_ptr<Transcript> transcript, const GenerationParams& params,
                               const StaticThemeConfig& fallback) {
  std::string names;
  for (const auto& n : kThemeNames) names += "- " + n + "\n";
  const std::string prompt =
      render_template(prompt_template, {{"themes", names}, {"topics", render_topic_list(topic_keywords)}});

  const int k = static_cast<int>(topic_keywords.size());
  AgentSession session("themes", std::move(provider), std::move(transcript));
  try {
    std::string reply = session.complete(ChatMessage::user(prompt), params);
    try {
      return {ThemeMembership::from_assignment(parse_theme_assignment(reply, k)), false};
    } catch (const RetryableParseError&) {
      reply = session.complete(ChatMessage::user(reprompt), params);
      return {ThemeMembership::from_assignment(parse_theme_assignment(reply, k)), false};
    }
  } catch (const ParseError&) {
  } catch (const ProviderRefusal&) {
  }
  return {consolidate_static(topic_keywords, fallback), true};
}

ThemeProfile theme_profile(const ThemeMembership& membership, const Eigen::VectorXd& theta) {
  ThemeProfile tp;
  tp.weights = consolidate_topic_weights(membership.gamma, theta);
  std::vector<int> order(static_cast<std::size_t>(tp.weights.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return tp.weights(a) > tp.weights(b); });
  for (int m : order) {
    if (tp.weights(m) > 0) tp.top_themes.push_back(membership.theme_names[static_cast<std::size_t>(m)]);
  }
  return tp;
}

}  // namespace panicsim
