#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace panicsim {

struct LdaParams {
  int topics = 25;
  int keywords_per_topic = 10;
  int iterations = 500;
  std::uint64_t seed = 2012;
  std::optional<double> alpha;  // defaults to 50 / topics
  double beta = 0.01;

  double effective_alpha() const { return alpha.value_or(50.0 / topics); }
  void validate() const;
};

/// Lowercased word tokens with at least two letters, not purely numeric and
/// not in the stopword list; apostrophes are dropped.
std::vector<std::string> topic_tokens(const std::string& text, const std::set<std::string>& stopwords);

/// Fitted collapsed-Gibbs LDA model: vocabulary plus topic-word counts.
class TopicModel {
 public:
  TopicModel() = default;
  TopicModel(LdaParams params, std::vector<std::string> vocabulary, Eigen::MatrixXi topic_word);

  const LdaParams& params() const { return params_; }
  int topics() const { return static_cast<int>(topic_word_.rows()); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  std::optional<int> word_id(const std::string& word) const;

  const Eigen::MatrixXi& topic_word_counts() const { return topic_word_; }
  /// Topic-word distributions phi (topics x vocabulary); rows sum to 1.
  const Eigen::MatrixXd& phi() const { return phi_; }

  /// Top keywords per topic by phi, ties broken alphabetically.
  std::vector<std::vector<std::string>> top_keywords(int n) const;
  std::vector<std::vector<std::string>> top_keywords() const { return top_keywords(params_.keywords_per_topic); }

  nlohmann::json to_json() const;
  static TopicModel from_json(const nlohmann::json& j);

 private:
  LdaParams params_;
  std::vector<std::string> vocabulary_;
  std::map<std::string, int> index_;
  Eigen::MatrixXi topic_word_;
  Eigen::MatrixXd phi_;
};

struct LdaFit {
  TopicModel model;
  /// Per-document topic mixtures theta (documents x topics); rows sum to 1.
  Eigen::MatrixXd doc_topic;
};

/// Fits on tokenized documents. Single sequential chain; deterministic for a
/// fixed seed. Throws DataError when the vocabulary is empty.
LdaFit fit_lda(const std::vector<std::vector<std::string>>& documents, const LdaParams& params);

struct TopicInference {
  Eigen::VectorXd theta;  // on the simplex
  bool out_of_vocabulary = false;
  int posts_used = 0;
};

/// Folds each post into the fixed model with Gibbs sampling, labels it with
/// its most likely topic and returns the normalized label histogram. A user
/// with no in-vocabulary tokens gets the uniform distribution and the flag.
TopicInference infer_topics(const TopicModel& model, const std::vector<std::vector<std::string>>& posts,
                            int iterations = 50, std::uint64_t seed = 7);

}  // namespace panicsim
