#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/agent.hpp"
#include "panicsim/annotator.hpp"
#include "panicsim/http_provider.hpp"
#include "panicsim/lda.hpp"

namespace panicsim {

/// One JSON file drives every subcommand. Relative paths resolve against the
/// directory holding the config file. Omitted keys take the defaults below.
struct RunConfig {
  std::filesystem::path base_dir;

  // corpus
  std::filesystem::path posts;
  std::optional<std::filesystem::path> labels;  // CSV user_id,label
  std::int64_t disaster_time = 0;
  double dedup_threshold = 0.85;
  int min_tokens = 5;
  int min_pre_posts = 10;
  double split_ratio = 0.8;
  double max_malformed_fraction = 0.1;

  std::filesystem::path disaster_context;
  std::filesystem::path assets_dir;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 2012;

  // backends
  std::string personality_backend = "lexicon";  // lexicon | llm | external
  std::string personality_endpoint;
  std::string sentiment_backend = "lexicon";  // lexicon | llm
  std::string discriminator_backend = "rule";  // rule | llm | external
  std::string discriminator_endpoint;
  std::string theme_mode = "static";  // static | llm
  bool tone = true;
  std::string ground_truth_mode = "labels";  // labels | posts

  std::optional<ProviderConfig> provider;
  std::optional<std::filesystem::path> mock_script;
  int max_in_flight = 4;

  LdaParams lda;
  AgentConfig agent;
  std::vector<std::string> query_terms;
  std::size_t relevant_k = 5;

  std::optional<std::filesystem::path> human_rounds;
  EdaConfig eda;

  void validate() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path asset(const std::string& name) const { return resolve(assets_dir) / name; }
  std::filesystem::path out(const std::string& name) const { return resolve(out_dir) / name; }

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

/// Leaf paths whose value differs from the default config, as
/// {"lda.iterations": {"default": 500, "value": 100}, ...}.
nlohmann::json config_overrides(const RunConfig& config);

}  // namespace panicsim
