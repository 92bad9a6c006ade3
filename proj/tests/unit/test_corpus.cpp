#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "panicsim/corpus.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/text.hpp"

using namespace panicsim;

namespace {

RawPost post(std::string id, std::string user, std::int64_t ts, std::string text) {
  RawPost p;
  p.post_id = std::move(id);
  p.user_id = std::move(user);
  p.timestamp = ts;
  p.text = std::move(text);
  return p;
}

// Independent cosine: term counts in ordered maps, no shared code with text.cpp.
double oracle_cosine(const std::string& a, const std::string& b) {
  auto counts = [](const std::string& s) {
    std::map<std::string, double> m;
    std::istringstream in(s);
    std::string w;
    while (in >> w) {
      for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      m[w] += 1;
    }
    return m;
  };
  const auto ca = counts(a), cb = counts(b);
  if (ca.empty() && cb.empty()) return 1.0;
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [w, n] : ca) {
    na += n * n;
    auto it = cb.find(w);
    if (it != cb.end()) dot += n * it->second;
  }
  for (const auto& [w, n] : cb) nb += n * n;
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST(Sanitize, Examples) {
  EXPECT_EQ(sanitize_text("RT @bob: look http://x.co NOW!!!"), "look NOW");
  EXPECT_EQ(sanitize_text(""), "");
  EXPECT_EQ(sanitize_text("Creepy clouds Go back"), "Creepy clouds Go back");
  EXPECT_EQ(sanitize_text("wind   gusts\t\tnear https://t.co/abc, www.example.com ok"), "wind gusts near ok");
}

TEST(Sanitize, Idempotent) {
  Rng rng(11);
  const std::string alphabet = "abcXYZ019 !?.,:@#/-_\t\xc3\xa9";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    const auto len = rng.below(40);
    for (std::size_t k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
    if (rng.below(4) == 0) s = "RT @x: " + s;
    if (rng.below(4) == 0) s += " http://t.co/q";
    const auto once = sanitize_text(s);
    EXPECT_EQ(sanitize_text(once), once) << "input: " << s;
  }
}

TEST(MeaningfulTokens, Examples) {
  EXPECT_EQ(meaningful_token_count(std::string_view("a b c")), 0);
  EXPECT_EQ(meaningful_token_count(std::string_view("storm is coming to town")), 5);
  EXPECT_EQ(meaningful_token_count(std::string_view("")), 0);
}

TEST(NearDuplicate, Examples) {
  EXPECT_TRUE(near_duplicate("storm surge tonight", "storm surge tonight", 0.85));
  EXPECT_FALSE(near_duplicate("storm surge", "quiet evening", 0.85));
  EXPECT_NEAR(tf_cosine("storm storm surge", "storm surge flood"), 3.0 / std::sqrt(5.0 * 3.0), 1e-12);
  EXPECT_FALSE(near_duplicate("storm storm surge", "storm surge flood", 0.85));
}

TEST(Dedup, Examples) {
  std::vector<RawPost> same = {post("1", "u", 1, "the storm is here now"), post("2", "u", 2, "the storm is here now"),
                               post("3", "u", 3, "the storm is here now")};
  auto r = dedup_corpus(same);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].post_id, "1");
  ASSERT_EQ(r.dropped.size(), 2u);
  EXPECT_EQ(r.dropped[0].matched_post_id, "1");
  EXPECT_EQ(r.dropped[1].matched_post_id, "1");

  std::vector<RawPost> two_users = {post("1", "a", 1, "power is out again"), post("2", "b", 1, "power is out again")};
  EXPECT_EQ(dedup_corpus(two_users).kept.size(), 2u);

  std::vector<RawPost> distinct = {post("1", "a", 1, "alpha beta"), post("2", "a", 2, "gamma delta")};
  EXPECT_TRUE(dedup_corpus(distinct).dropped.empty());
}

TEST(Dedup, MatchesBruteForceOracle) {
  const std::vector<std::string> vocab = {"storm", "surge", "wind", "rain", "power", "out", "flood", "safe", "home", "now"};
  Rng rng(2012);
  for (int corpus = 0; corpus < 50; ++corpus) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<RawPost> posts;
    for (std::size_t i = 0; i < n; ++i) {
      // small vocabulary and short texts so near-duplicates are common
      std::string text;
      const auto len = 1 + rng.below(5);
      for (std::size_t k = 0; k < len; ++k) text += (k ? " " : "") + vocab[rng.below(vocab.size())];
      posts.push_back(post("p" + std::to_string(i), "u" + std::to_string(rng.below(4)), static_cast<std::int64_t>(i), text));
    }

    // O(n^2): similarity of every pair, then a single greedy pass in input order.
    std::vector<std::vector<double>> sim(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sim[i][j] = oracle_cosine(posts[i].text, posts[j].text);
    std::vector<bool> keep(n, true);
    std::map<std::string, std::string> match;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (keep[j] && posts[j].user_id == posts[i].user_id && sim[j][i] > 0.85 + 1e-12) {
          keep[i] = false;
          match[posts[i].post_id] = posts[j].post_id;
          break;
        }
      }
    }

    const auto result = dedup_corpus(posts, 0.85);
    std::vector<std::string> expected_kept, got_kept;
    for (std::size_t i = 0; i < n; ++i)
      if (keep[i]) expected_kept.push_back(posts[i].post_id);
    for (const auto& p : result.kept) got_kept.push_back(p.post_id);
    ASSERT_EQ(got_kept, expected_kept) << "corpus " << corpus;
    ASSERT_EQ(result.dropped.size(), match.size());
    for (const auto& d : result.dropped) EXPECT_EQ(d.matched_post_id, match.at(d.post_id));
  }
}

TEST(SelectUsers, Boundaries) {
  auto timeline = [](std::string id, int pre, int post_n) {
    UserTimeline t;
    t.user_id = std::move(id);
    for (int i = 0; i < pre; ++i) t.pre_posts.push_back(post("a", t.user_id, i, "x"));
    for (int i = 0; i < post_n; ++i) t.post_posts.push_back(post("b", t.user_id, 100 + i, "x"));
    return t;
  };
  auto kept = select_users({timeline("ten", 10, 1), timeline("nine", 9, 50), timeline("nopost", 12, 0)}, 10);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].user_id, "ten");
}

TEST(TemporalSplit, Examples) {
  std::vector<RawPost> early = {post("1", "u", 1, "a"), post("2", "u", 2, "b")};
  auto s = temporal_split(early, 10);
  EXPECT_EQ(s.pre.size(), 2u);
  EXPECT_TRUE(s.post.empty());

  auto boundary = temporal_split({post("1", "u", 10, "a")}, 10);
  EXPECT_TRUE(boundary.pre.empty());
  EXPECT_EQ(boundary.post.size(), 1u);

  std::vector<RawPost> mixed = {post("1", "u", 5, "a"), post("2", "u", 15, "b"), post("3", "u", 9, "c"),
                                post("4", "u", 10, "d"), post("5", "u", 2, "e")};
  auto m = temporal_split(mixed, 10);
  ASSERT_EQ(m.pre.size(), 3u);
  ASSERT_EQ(m.post.size(), 2u);
  EXPECT_EQ(m.pre[0].post_id, "1");
  EXPECT_EQ(m.pre[1].post_id, "3");
  EXPECT_EQ(m.pre[2].post_id, "5");
  EXPECT_EQ(m.post[0].post_id, "2");
  EXPECT_EQ(m.post[1].post_id, "4");
}

TEST(TemporalSplit, NothingLostOrDuplicated) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RawPost> posts;
    const auto n = rng.below(30);
    for (std::size_t i = 0; i < n; ++i)
      posts.push_back(post("p" + std::to_string(i), "u", static_cast<std::int64_t>(rng.below(20)), "x"));
    auto s = temporal_split(posts, 10);
    std::multiset<std::string> in, out;
    for (const auto& p : posts) in.insert(p.post_id);
    for (const auto& p : s.pre) out.insert(p.post_id);
    for (const auto& p : s.post) out.insert(p.post_id);
    EXPECT_EQ(in, out);
  }
}

TEST(TrainTestSplit, FullScaleAndDeterminism) {
  std::vector<std::string> users;
  for (int i = 0; i < 9065; ++i) users.push_back("user" + std::to_string(i));
  auto a = split_train_test(users, 0.8, 7);
  EXPECT_EQ(a.test.size(), 1813u);
  EXPECT_EQ(a.train.size(), 9065u - 1813u);
  auto b = split_train_test(users, 0.8, 7);
  EXPECT_EQ(a.test, b.test);
  for (const auto& u : a.test) EXPECT_EQ(a.train.count(u), 0u);

  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(std::to_string(i));
  EXPECT_EQ(split_train_test(ten, 0.8, 1).test.size(), 2u);
}

TEST(LoadPosts, MalformedRowsReported) {
  std::istringstream in(
      "{\"post_id\":\"1\",\"user_id\":\"u\",\"timestamp\":5,\"text\":\"hello there\"}\n"
      "{not json\n"
      "{\"post_id\":\"2\",\"user_id\":\"u\",\"text\":\"no time\"}\n");
  auto r = parse_posts_jsonl(in);
  EXPECT_EQ(r.rows_read, 3u);
  ASSERT_EQ(r.posts.size(), 1u);
  ASSERT_EQ(r.malformed.size(), 2u);
  EXPECT_EQ(r.malformed[0].line, 2u);
}

TEST(LoadPosts, CsvQuotedFields) {
  auto f = split_csv_line("1,\"a, \"\"quoted\"\" text\",x");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[1], "a, \"quoted\" text");
}
