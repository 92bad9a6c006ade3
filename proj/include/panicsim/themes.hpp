#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "panicsim/errors.hpp"
#include "panicsim/gateway.hpp"

namespace panicsim {

inline const std::array<std::string, 8> kThemeNames = {
    "Politics & Elections",     "Natural Disasters & Weather", "Energy & Environment",
    "Sports & Entertainment",   "Economy & Business",          "Society & News",
    "Technology & Innovation",  "Miscellaneous"};

std::optional<int> theme_index(const std::string& name);

/// Gamma: themes x topics, one-hot columns.
struct ThemeMembership {
  Eigen::MatrixXd gamma;
  std::vector<std::string> theme_names;

  int topics() const { return static_cast<int>(gamma.cols()); }
  /// Theme index each topic belongs to.
  std::vector<int> assignment() const;
  static ThemeMembership from_assignment(const std::vector<int>& assignment);

  nlohmann::json to_json() const;
  static ThemeMembership from_json(const nlohmann::json& j);
};

/// Checked-in static consolidation config:
///   {"seed_keywords": {"<theme>": ["word", ...], ...},
///    "assignments": {"<topic index>": "<theme>", ...}}   (optional)
/// Explicit assignments win; other topics go to the theme whose seed words
/// overlap their keyword list most (earlier keywords weigh more), ties to the
/// lower theme index, no overlap to Miscellaneous.
struct StaticThemeConfig {
  std::map<std::string, std::vector<std::string>> seed_keywords;
  std::map<int, std::string> assignments;

  nlohmann::json to_json() const;
  static StaticThemeConfig from_json(const nlohmann::json& j);
  static StaticThemeConfig load(const std::filesystem::path& path);
};

int assign_theme(const std::vector<std::string>& keywords, const StaticThemeConfig& config);

ThemeMembership consolidate_static(const std::vector<std::vector<std::string>>& topic_keywords,
                                   const StaticThemeConfig& config);

/// Parses "Topic <n>: <theme>" lines (1-based topic numbers). Throws
/// RetryableParseError when a topic is missing or names an unknown theme.
std::vector<int> parse_theme_assignment(const std::string& reply, int topics);

/// Renders the topic list for the consolidation prompt.
std::string render_topic_list(const std::vector<std::vector<std::string>>& topic_keywords);

struct LlmThemeResult {
  ThemeMembership membership;
  bool fell_back_to_static = false;
};

/// One prompt in session "themes", one re-prompt on a parse failure, then
/// the static mapping.
LlmThemeResult consolidate_llm(const std::vector<std::vector<std::string>>& topic_keywords,
                               const std::string& prompt_template, const std::string& reprompt,
                               std::shared_ptr<ChatProvider> provider,
                               std::shared_ptr<Transcript> transcript, const GenerationParams& params,
                               const StaticThemeConfig& fallback);

struct ThemeProfile {
  Eigen::VectorXd weights;             // tau
  std::vector<std::string> top_themes;  // descending weight, ties by index, zero weights dropped
};

/// tau = gamma * theta.
template <typename G, typename T>
Eigen::VectorXd consolidate_topic_weights(const Eigen::MatrixBase<G>& gamma, const Eigen::MatrixBase<T>& theta) {
  if (gamma.cols() != theta.size())
    throw DataError("theme matrix has " + std::to_string(gamma.cols()) + " topic columns but theta has " +
                    std::to_string(theta.size()) + " entries");
  return gamma * theta;
}

ThemeProfile theme_profile(const ThemeMembership& membership, const Eigen::VectorXd& theta);

}  // namespace panicsim
