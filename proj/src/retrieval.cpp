#include "panicsim/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "panicsim/text.hpp"

namespace panicsim {

std::vector<ScoredPost> score_posts(const std::vector<RawPost>& posts, const std::vector<std::string>& query_terms) {
  std::set<std::string> query;
  for (const auto& q : query_terms) {
    for (auto& t : word_tokens(q)) query.insert(std::move(t));
  }

  std::vector<std::map<std::string, int>> tf(posts.size());
  std::map<std::string, int> df;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (const auto& t : word_tokens(posts[i].text)) {
      if (query.count(t)) ++tf[i][t];
    }
    for (const auto& [t, n] : tf[i]) ++df[t];
  }

  const auto n_docs = static_cast<double>(posts.size());
  std::vector<ScoredPost> out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    double score = 0;
    for (const auto& [t, n] : tf[i]) score += n * (std::log((n_docs + 1) / (df[t] + 1)) + 1.0);
    out.push_back({&posts[i], score});
  }
  return out;
}

std::vector<RawPost> retrieve_relevant(const std::vector<RawPost>& posts, const std::vector<std::string>& query_terms,
                                       std::size_t k) {
  auto scored = score_posts(posts, query_terms);
  std::erase_if(scored, [](const ScoredPost& s) { return !(s.score > 0); });
  std::sort(scored.begin(), scored.end(), [](const ScoredPost& a, const ScoredPost& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.post->timestamp != b.post->timestamp) return a.post->timestamp > b.post->timestamp;
    return a.post->post_id > b.post->post_id;
  });
  std::vector<RawPost> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(*scored[i].post);
  return out;
}

}  // namespace panicsim
