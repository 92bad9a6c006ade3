#include "panicsim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "panicsim/errors.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

std::optional<PanicClass> parse_panic_class(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "panic" || t == "yes" || t == "1" || t == "true") return PanicClass::Panic;
  if (t == "nopanic" || t == "no panic" || t == "no_panic" || t == "no" || t == "0" || t == "false")
    return PanicClass::NoPanic;
  return std::nullopt;
}

int meaningful_token_count(const RawPost& post) { return meaningful_token_count(post.text); }

DedupResult dedup_corpus(const std::vector<RawPost>& posts, double threshold) {
  DedupResult result;
  std::map<std::string, std::vector<std::size_t>> kept_by_user;  // indices into result.kept
  for (const auto& post : posts) {
    auto& kept_indices = kept_by_user[post.user_id];
    const RawPost* match = nullptr;
    for (std::size_t idx : kept_indices) {
      if (near_duplicate(result.kept[idx].text, post.text, threshold)) {
        match = &result.kept[idx];
        break;
      }
    }
    if (match) {
      result.dropped.push_back({post.post_id, match->post_id});
    } else {
      kept_indices.push_back(result.kept.size());
      result.kept.push_back(post);
    }
  }
  return result;
}

PhaseSplit temporal_split(const std::vector<RawPost>& posts, std::int64_t disaster_time) {
  PhaseSplit split;
  for (const auto& post : posts) {
    (post.timestamp < disaster_time ? split.pre : split.post).push_back(post);
  }
  return split;
}

std::vector<UserTimeline> build_timelines(const std::vector<RawPost>& posts,
                                          std::int64_t disaster_time) {
  std::map<std::string, std::vector<RawPost>> by_user;
  for (const auto& post : posts) by_user[post.user_id].push_back(post);

  std::vector<UserTimeline> timelines;
  timelines.reserve(by_user.size());
  for (auto& [user_id, user_posts] : by_user) {
    std::stable_sort(user_posts.begin(), user_posts.end(), [](const RawPost& a, const RawPost& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.post_id < b.post_id;
    });
    auto split = temporal_split(user_posts, disaster_time);
    UserTimeline timeline;
    timeline.user_id = user_id;
    timeline.pre_posts = std::move(split.pre);
    timeline.post_posts = std::move(split.post);
    timelines.push_back(std::move(timeline));
  }
  return timelines;
}

std::vector<UserTimeline> select_users(const std::vector<UserTimeline>& timelines, int min_pre) {
  std::vector<UserTimeline> selected;
  for (const auto& t : timelines) {
    if (!t.post_posts.empty() && static_cast<int>(t.pre_posts.size()) >= min_pre) {
      selected.push_back(t);
    }
  }
  return selected;
}

CorpusPartition split_train_test(const std::vector<std::string>& user_ids, double ratio,
                                 std::uint64_t seed) {
  if (user_ids.empty()) throw DataError("split_train_test: empty user set");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split_train_test: ratio must be in (0,1)");

  std::vector<std::string> ids = user_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);

  const auto n = static_cast<double>(ids.size());
  const auto test_size = static_cast<std::size_t>(std::llround((1.0 - ratio) * n));
  CorpusPartition partition;
  partition.seed = seed;
  partition.ratio = ratio;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    (i < test_size ? partition.test : partition.train).insert(ids[i]);
  }
  return partition;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(json& j, const RawPost& p) {
  j = json::object();
  j["post_id"] = p.post_id;
  j["user_id"] = p.user_id;
  j["timestamp"] = p.timestamp;
  j["text"] = p.text;
  if (p.latitude) j["latitude"] = *p.latitude;
  if (p.longitude) j["longitude"] = *p.longitude;
  j["follower_count"] = p.follower_count;
  j["followee_count"] = p.followee_count;
}

namespace {

std::string id_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw DataError(std::string("field '") + key + "' must be a string");
}

std::uint64_t count_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return 0;
  const auto& v = j[key];
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  throw DataError(std::string("field '") + key + "' must be a non-negative integer");
}

std::optional<double> coordinate_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw DataError(std::string("field '") + key + "' must be numeric");
  return j[key].get<double>();
}

}  // namespace

void from_json(const json& j, RawPost& p) {
  p.post_id = id_field(j, "post_id");
  p.user_id = id_field(j, "user_id");
  if (!j.at("timestamp").is_number_integer()) throw DataError("timestamp must be an integer");
  p.timestamp = j.at("timestamp").get<std::int64_t>();
  if (p.timestamp <= 0) throw DataError("timestamp must be positive");
  p.text = j.at("text").get<std::string>();
  p.latitude = coordinate_field(j, "latitude");
  p.longitude = coordinate_field(j, "longitude");
  p.follower_count = count_field(j, "follower_count");
  p.followee_count = count_field(j, "followee_count");
}

void to_json(json& j, const UserTimeline& t) {
  j = json::object();
  j["user_id"] = t.user_id;
  j["pre_posts"] = t.pre_posts;
  j["post_posts"] = t.post_posts;
  if (t.ground_truth) {
    j["ground_truth"] = {{"label", std::string(to_string(t.ground_truth->label))},
                         {"score", t.ground_truth->score}};
  } else {
    j["ground_truth"] = nullptr;
  }
}

void from_json(const json& j, UserTimeline& t) {
  t.user_id = j.at("user_id").get<std::string>();
  t.pre_posts = j.at("pre_posts").get<std::vector<RawPost>>();
  t.post_posts = j.at("post_posts").get<std::vector<RawPost>>();
  t.ground_truth.reset();
  if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
    const auto& g = j["ground_truth"];
    auto cls = parse_panic_class(g.at("label").get<std::string>());
    if (!cls) throw DataError("bad ground_truth label for " + t.user_id);
    t.ground_truth = PanicLabel{*cls, g.value("score", *cls == PanicClass::Panic ? 1.0 : 0.0)};
  }
}

void to_json(json& j, const CorpusPartition& p) {
  j = json::object();
  j["seed"] = p.seed;
  j["ratio"] = p.ratio;
  j["train"] = std::vector<std::string>(p.train.begin(), p.train.end());
  j["test"] = std::vector<std::string>(p.test.begin(), p.test.end());
}

void from_json(const json& j, CorpusPartition& p) {
  p.seed = j.at("seed").get<std::uint64_t>();
  p.ratio = j.at("ratio").get<double>();
  const auto train = j.at("train").get<std::vector<std::string>>();
  const auto test = j.at("test").get<std::vector<std::string>>();
  p.train = {train.begin(), train.end()};
  p.test = {test.begin(), test.end()};
}

// ---------------------------------------------------------------------------
// Ingest

PostLoadResult parse_posts_jsonl(std::istream& in) {
  PostLoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++result.rows_read;
    try {
      result.posts.push_back(json::parse(line).get<RawPost>());
    } catch (const std::exception& e) {
      result.malformed.push_back({line_no, e.what()});
    }
  }
  return result;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

PostLoadResult parse_posts_csv(std::istream& in) {
  PostLoadResult result;
  std::string line;
  if (!std::getline(in, line)) return result;
  const auto header = split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++result.rows_read;
    try {
      const auto fields = split_csv_line(line);
      if (fields.size() != header.size()) throw DataError("column count mismatch");
      json row = json::object();
      for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& name = header[i];
        const std::string value = trim(fields[i]);
        if (name == "timestamp" || name == "follower_count" || name == "followee_count") {
          if (value.empty()) continue;
          std::size_t used = 0;
          const long long parsed = std::stoll(value, &used);
          if (used != value.size()) throw DataError("non-integer " + name);
          row[name] = parsed;
        } else if (name == "latitude" || name == "longitude") {
          if (value.empty()) continue;
          std::size_t used = 0;
          const double parsed = std::stod(value, &used);
          if (used != value.size()) throw DataError("non-numeric " + name);
          row[name] = parsed;
        } else {
          row[name] = fields[i];
        }
      }
      result.posts.push_back(row.get<RawPost>());
    } catch (const std::exception& e) {
      result.malformed.push_back({line_no, e.what()});
    }
  }
  return result;
}

PostLoadResult load_posts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return path.extension() == ".csv" ? parse_posts_csv(in) : parse_posts_jsonl(in);
}

}  // namespace panicsim
