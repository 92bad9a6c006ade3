#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/disaster.hpp"
#include "panicsim/gateway.hpp"
#include "panicsim/parsers.hpp"
#include "panicsim/profile.hpp"
#include "panicsim/templates.hpp"

namespace panicsim {

/// Six named prose sections injected as psychological constraints.
struct PsychKnowledge {
  std::vector<std::pair<std::string, std::string>> sections;

  /// Markdown with "## <title>" headings. Throws DataError unless there are
  /// six non-empty sections.
  static PsychKnowledge parse(const std::string& markdown);
  static PsychKnowledge load(const std::filesystem::path& path);
  std::string render() const;
};

enum class ToneBand { Panicked, Neutral, Calm };
std::string_view to_string(ToneBand band);

/// p > panic_above is Panicked, p < calm_below is Calm, otherwise Neutral.
ToneBand tone_band(double p, double calm_below = 0.49, double panic_above = 0.51);

/// Percent with at most two decimals and no trailing zeros: 0.55 -> "55", 0.5625 -> "56.25".
std::string format_percent(double p);

/// Profile serialized for the stage-1 prompt.
std::string render_user_info(const UserProfile& profile);

enum class ProbabilitySource { LlmReported, FallbackFormula };

struct PanicAssessment {
  double probability = 0;
  ProbabilitySource source = ProbabilitySource::FallbackFormula;
};

enum class Outcome { Completed, InvalidQuestionnaire, ProviderRefused, UnverifiedAccepted, Failed };
std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view text);

struct Exchange {
  std::string stage;
  std::string session;
  std::size_t turn = 0;
  std::string prompt;
  std::string reply;
};

struct StageTrace {
  std::string user_id;
  Outcome outcome = Outcome::Failed;
  std::string reason;
  std::vector<Exchange> exchanges;
  std::optional<PpdtsResponse> ppdts;
  std::optional<ArousalFactors> factors;
  std::optional<PanicAssessment> panic;
  std::vector<TweetCandidate> tweets;
  std::optional<ExpertVerdict> verdict;
  std::vector<std::optional<ExpertVerdict>> verdict_history;  // one per attempt; nullopt when unparseable
  int attempts = 0;

  int retries() const { return attempts > 0 ? attempts - 1 : 0; }
  /// Outcome is completed or unverified-accepted.
  bool predictable() const { return outcome == Outcome::Completed || outcome == Outcome::UnverifiedAccepted; }
};

nlohmann::json to_json(const StageTrace& trace);
StageTrace trace_from_json(const nlohmann::json& j);

struct AgentConfig {
  GenerationParams analysis{0.4, std::nullopt, 1024, ""};
  GenerationParams generation{0.7, 0.4, 1024, ""};
  int tweets_n = 1;
  int max_retries = 3;
  int validity_min = 18;
  double calm_below = 0.49;
  double panic_above = 0.51;
  int reprompts = 1;

  void validate() const;
};

/// Everything a user pipeline reads besides the profile.
struct AgentAssets {
  PsychKnowledge knowledge;
  std::vector<PpdtsItem> items;
  TemplateSet templates;
  DisasterContext disaster;
};

// Individual stages.

std::string render_stage1(const PsychKnowledge& knowledge, const DisasterContext& disaster, const UserProfile& profile,
                          const TemplateSet& templates);
std::string render_stage2(const std::vector<PpdtsItem>& items, const TemplateSet& templates);
std::string render_stage3(const TemplateSet& templates);
std::string render_generation(double p_panic, int n, const TemplateSet& templates, double calm_below = 0.49,
                              double panic_above = 0.51);
std::string render_feedback(const std::optional<ExpertVerdict>& verdict, const TemplateSet& templates);
std::string render_expert(const UserProfile& profile, const DisasterContext& disaster, double p_panic,
                          const std::vector<TweetCandidate>& tweets, const TemplateSet& templates);

std::string administer_ppdts(AgentSession& session, const std::vector<PpdtsItem>& items, const TemplateSet& templates,
                             const GenerationParams& params);
std::string run_arousal(AgentSession& session, const TemplateSet& templates, const GenerationParams& params);
std::string generate_tweets(AgentSession& session, const std::string& prompt, const GenerationParams& params);

ExpertVerdict verify_tweets(AgentSession& expert_session, const UserProfile& profile, const DisasterContext& disaster,
                            double p_panic, const std::vector<TweetCandidate>& tweets, const TemplateSet& templates,
                            const GenerationParams& params);

struct VerifiedGeneration {
  std::vector<TweetCandidate> tweets;
  std::optional<ExpertVerdict> verdict;
  std::vector<std::optional<ExpertVerdict>> history;
  int attempts = 0;
  bool verified = false;
};

/// Generate in the user session, verify in a fresh "<user>/expert/<attempt>"
/// session, and on failure regenerate with the experts' reasons appended,
/// for at most 1 + max_retries attempts.
VerifiedGeneration retry_verified_generation(AgentSession& session, const LlmHandle& llm, const UserProfile& profile,
                                             const AgentAssets& assets, double p_panic, const AgentConfig& config,
                                             std::vector<Exchange>* exchanges = nullptr);

/// Runs all four stages for one user. Never throws for per-user failures;
/// they land in the outcome.
StageTrace run_user_pipeline(const UserProfile& profile, const AgentAssets& assets, const LlmHandle& llm,
                             const AgentConfig& config);

}  // namespace panicsim
