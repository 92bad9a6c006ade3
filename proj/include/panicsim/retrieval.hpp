#pragma once

#include <string>
#include <vector>

#include "panicsim/corpus.hpp"

namespace panicsim {

struct ScoredPost {
  const RawPost* post = nullptr;
  double score = 0;
};

/// TF-IDF of every post against the query terms, with idf computed over the
/// given posts: idf(t) = ln((N + 1) / (df(t) + 1)) + 1.
std::vector<ScoredPost> score_posts(const std::vector<RawPost>& posts, const std::vector<std::string>& query_terms);

/// Top k posts with positive score, highest first; ties go to the more
/// recent post, then the larger post_id.
std::vector<RawPost> retrieve_relevant(const std::vector<RawPost>& posts, const std::vector<std::string>& query_terms,
                                       std::size_t k = 5);

}  // namespace panicsim
