#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/gateway.hpp"
#include "panicsim/labels.hpp"
#include "panicsim/lexicon.hpp"
#include "panicsim/rng.hpp"

namespace panicsim {

struct YesNoLabel {
  bool yes = false;
  std::string explanation;
};

struct HumanVote {
  int round = 0;  // 1..3
  bool panic = false;
};

struct AnnotationRecord {
  std::string post_id;
  std::string text;
  std::optional<YesNoLabel> llm_relevance;
  std::optional<YesNoLabel> llm_panic;
  std::vector<HumanVote> human_rounds;
  std::optional<PanicClass> final_label;
};

nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

/// Leading Yes/No plus the rest of the reply as explanation; throws
/// RetryableParseError otherwise.
YesNoLabel parse_yes_no_label(const std::string& reply);

/// Session "annotate/<post_id>/<kind>"; one re-prompt, then nullopt.
std::optional<YesNoLabel> llm_label(const std::string& post_id, const std::string& kind, const std::string& text,
                                    const LlmHandle& llm, const std::string& prompt_template, const std::string& reprompt);

/// Majority over the LLM panic label and the human rounds; a tie goes to
/// the human majority, then to NoPanic. Throws DataError with no labels.
PanicClass merge_labels(const AnnotationRecord& record);

/// CSV with header post_id,round,label. Rounds outside 1..3 are rejected.
std::map<std::string, std::vector<HumanVote>> load_human_rounds(const std::filesystem::path& path);

struct EdaConfig {
  double synonym_rate = 0.1;
  double swap_rate = 0.1;
  double delete_rate = 0.1;
  double insert_rate = 0.1;
  int variants = 4;
  std::uint64_t seed = 2012;

  void validate() const;
  nlohmann::json to_json() const;
  static EdaConfig from_json(const nlohmann::json& j);
};

enum class EdaOp { SynonymReplace, RandomSwap, RandomDelete, RandomInsert };

/// Applies one operation n = max(1, round(rate * tokens)) times.
std::vector<std::string> apply_eda_op(EdaOp op, std::vector<std::string> tokens, double rate, const Thesaurus& thesaurus,
                                      Rng& rng);

/// `variants` outputs; variant i applies the (i mod k)-th enabled operation.
/// With every rate 0 each variant equals the input. Never empty.
std::vector<std::string> eda_augment(const std::string& text, const EdaConfig& config, const Thesaurus& thesaurus);

}  // namespace panicsim
