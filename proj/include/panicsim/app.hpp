#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "panicsim/agent.hpp"
#include "panicsim/config.hpp"
#include "panicsim/gateway.hpp"
#include "panicsim/metrics.hpp"
#include "panicsim/profile.hpp"

namespace panicsim {

// Store file names under RunConfig::out_dir.
inline constexpr const char* kTimelinesFile = "timelines.jsonl";
inline constexpr const char* kPartitionFile = "partition.json";
inline constexpr const char* kIngestStatsFile = "ingest_stats.json";
inline constexpr const char* kProfilesFile = "profiles.jsonl";
inline constexpr const char* kThemesFile = "themes.json";
inline constexpr const char* kProfileTranscriptFile = "profile_transcripts.jsonl";
inline constexpr const char* kTracesFile = "traces.jsonl";
inline constexpr const char* kTranscriptFile = "transcripts.jsonl";
inline constexpr const char* kPredictionsFile = "predictions.jsonl";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportCsvFile = "report.csv";
inline constexpr const char* kEvaluateTranscriptFile = "evaluate_transcripts.jsonl";
inline constexpr const char* kLabelsFile = "labels.jsonl";
inline constexpr const char* kAugmentedFile = "augmented.jsonl";
inline constexpr const char* kAnnotateTranscriptFile = "annotate_transcripts.jsonl";

/// Mock script when configured, otherwise the HTTP provider. Throws
/// ConfigError when neither is set.
std::shared_ptr<ChatProvider> make_provider(const RunConfig& config);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// CSV with header user_id,label.
std::map<std::string, PanicClass> load_user_labels(const std::filesystem::path& path);

/// Transcript records sorted by (session, turn), one JSON object per line.
void write_transcript(const std::filesystem::path& path, std::vector<TranscriptRecord> records);

struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t malformed = 0;
  std::size_t short_posts = 0;
  std::size_t duplicates = 0;
  std::size_t posts_kept = 0;
  std::size_t users_total = 0;
  std::size_t users_retained = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t labeled_users = 0;

  nlohmann::json to_json() const;
};

/// Load, sanitize, drop short posts, dedup, split by phase, select users and
/// partition. Aborts with DataError when malformed rows exceed the configured fraction.
IngestStats run_ingest(const RunConfig& config, std::ostream& log);

struct ProfileStats {
  std::size_t profiles = 0;
  bool lda_cache_hit = false;
  std::filesystem::path lda_path;
  bool themes_fell_back = false;
};

/// Fits (or reuses) the topic model on training-user posts and writes one
/// profile per retained user.
ProfileStats run_profile(const RunConfig& config, std::ostream& log);

struct SimulateStats {
  std::size_t users = 0;
  std::size_t ran = 0;
  std::size_t resumed = 0;
  std::map<std::string, long> outcomes;
};

/// Runs the agent pipeline for every test-partition user.
SimulateStats run_simulate(const RunConfig& config, bool resume, std::ostream& log);

/// Discriminator plus veto over the traces, then metrics. Writes the report files.
EvalReport run_evaluate(const RunConfig& config, std::ostream& log);

struct AnnotateStats {
  std::size_t posts = 0;
  std::size_t labeled = 0;
  std::size_t skipped = 0;
  std::size_t irrelevant = 0;
  std::size_t unlabeled = 0;
  std::size_t variants = 0;
};

AnnotateStats run_annotate(const RunConfig& config, bool resume, std::ostream& log);

/// Human-readable chain report: profile, PPDTS, factors, probability,
/// tweets and verdicts. Sections a trace never reached are omitted.
std::string render_case_report(const StageTrace& trace, const std::optional<UserProfile>& profile,
                               const std::vector<PpdtsItem>& items);

/// Throws NotFound when the user has no trace.
std::string run_trace(const RunConfig& config, const std::string& user_id, bool as_json);

}  // namespace panicsim
