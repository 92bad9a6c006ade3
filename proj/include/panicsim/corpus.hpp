#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/labels.hpp"

namespace panicsim {

struct RawPost {
  std::string post_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::string text;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::uint64_t follower_count = 0;
  std::uint64_t followee_count = 0;

  bool has_coordinates() const { return latitude.has_value() && longitude.has_value(); }
};

struct UserTimeline {
  std::string user_id;
  std::vector<RawPost> pre_posts;   // timestamp < disaster_time, ascending
  std::vector<RawPost> post_posts;  // timestamp >= disaster_time, ascending
  std::optional<PanicLabel> ground_truth;
};

struct CorpusPartition {
  std::set<std::string> train;
  std::set<std::string> test;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

struct DroppedPost {
  std::string post_id;
  std::string matched_post_id;
};

struct DedupResult {
  std::vector<RawPost> kept;
  std::vector<DroppedPost> dropped;
};

struct PhaseSplit {
  std::vector<RawPost> pre;
  std::vector<RawPost> post;
};

int meaningful_token_count(const RawPost& post);

/// Greedy per-user scan over timestamp-ordered posts: a post is dropped when it
/// near-duplicates an earlier kept post of the same user; the earliest such
/// kept post is recorded as its match.
DedupResult dedup_corpus(const std::vector<RawPost>& posts, double threshold = 0.85);

/// Order-preserving partition; a post exactly at disaster_time is post-phase.
PhaseSplit temporal_split(const std::vector<RawPost>& posts, std::int64_t disaster_time);

/// Groups posts by user and splits each user's posts into phases, sorted by
/// (timestamp, post_id). Output is ordered by user_id.
std::vector<UserTimeline> build_timelines(const std::vector<RawPost>& posts,
                                          std::int64_t disaster_time);

/// Users with at least one post-phase post and at least min_pre pre-phase posts.
std::vector<UserTimeline> select_users(const std::vector<UserTimeline>& timelines, int min_pre = 10);

/// Seeded shuffle of the sorted user ids; the first round((1 - ratio) * N) go to test.
CorpusPartition split_train_test(const std::vector<std::string>& user_ids, double ratio,
                                 std::uint64_t seed);

// Serialization.

void to_json(nlohmann::json& j, const RawPost& post);
void from_json(const nlohmann::json& j, RawPost& post);
void to_json(nlohmann::json& j, const UserTimeline& timeline);
void from_json(const nlohmann::json& j, UserTimeline& timeline);
void to_json(nlohmann::json& j, const CorpusPartition& partition);
void from_json(const nlohmann::json& j, CorpusPartition& partition);

struct MalformedRow {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct PostLoadResult {
  std::vector<RawPost> posts;
  std::vector<MalformedRow> malformed;
  std::size_t rows_read = 0;
};

/// Line-delimited JSON or CSV with a header row (chosen by extension: .csv
/// is CSV, anything else JSONL). Malformed rows are reported, not thrown.
PostLoadResult load_posts(const std::filesystem::path& path);
PostLoadResult parse_posts_jsonl(std::istream& in);
PostLoadResult parse_posts_csv(std::istream& in);

/// Splits one CSV record honoring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace panicsim
