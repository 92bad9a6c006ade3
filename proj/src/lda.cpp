#include "panicsim/lda.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "panicsim/errors.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

void LdaParams::validate() const {
  if (topics < 2) throw ConfigError("LDA needs at least 2 topics");
  if (keywords_per_topic < 1) throw ConfigError("keywords_per_topic must be positive");
  if (iterations < 1) throw ConfigError("LDA iterations must be positive");
  if (!(effective_alpha() > 0) || !(beta > 0)) throw ConfigError("LDA priors must be positive");
}

std::vector<std::string> topic_tokens(const std::string& text, const std::set<std::string>& stopwords) {
  std::vector<std::string> out;
  for (auto token : word_tokens(text)) {
    std::erase(token, '\'');
    int letters = 0;
    for (char c : token) letters += std::isalpha(static_cast<unsigned char>(c)) ? 1 : 0;
    if (letters < 2) continue;
    if (stopwords.count(token)) continue;
    out.push_back(std::move(token));
  }
  return out;
}

TopicModel::TopicModel(LdaParams params, std::vector<std::string> vocabulary, Eigen::MatrixXi topic_word)
    : params_(params), vocabulary_(std::move(vocabulary)), topic_word_(std::move(topic_word)) {
  if (topic_word_.cols() != static_cast<Eigen::Index>(vocabulary_.size()))
    throw DataError("topic-word matrix does not match vocabulary size");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) index_[vocabulary_[i]] = static_cast<int>(i);

  const double beta = params_.beta;
  const auto vocab = static_cast<double>(vocabulary_.size());
  const Eigen::VectorXd totals = topic_word_.cast<double>().rowwise().sum();
  phi_ = (topic_word_.cast<double>().array() + beta).colwise() / (totals.array() + vocab * beta);
}

std::optional<int> TopicModel::word_id(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<std::string>> TopicModel::top_keywords(int n) const {
  std::vector<std::vector<std::string>> result;
  const auto vocab = static_cast<int>(vocabulary_.size());
  for (int k = 0; k < topics(); ++k) {
    std::vector<int> ids(static_cast<std::size_t>(vocab));
    std::iota(ids.begin(), ids.end(), 0);
    const int take = std::min(n, vocab);
    std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
      if (topic_word_(k, a) != topic_word_(k, b)) return topic_word_(k, a) > topic_word_(k, b);
      return vocabulary_[static_cast<std::size_t>(a)] < vocabulary_[static_cast<std::size_t>(b)];
    });
    std::vector<std::string> words;
    for (int i = 0; i < take; ++i) words.push_back(vocabulary_[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])]);
    result.push_back(std::move(words));
  }
  return result;
}

json TopicModel::to_json() const {
  json counts = json::array();
  for (Eigen::Index k = 0; k < topic_word_.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index w = 0; w < topic_word_.cols(); ++w) row.push_back(topic_word_(k, w));
    counts.push_back(std::move(row));
  }
  json j;
  j["topics"] = params_.topics;
  j["keywords_per_topic"] = params_.keywords_per_topic;
  j["iterations"] = params_.iterations;
  j["seed"] = params_.seed;
  j["alpha"] = params_.effective_alpha();
  j["beta"] = params_.beta;
  j["vocabulary"] = vocabulary_;
  j["topic_word_counts"] = std::move(counts);
  j["keywords"] = top_keywords();
  return j;
}

TopicModel TopicModel::from_json(const json& j) {
  LdaParams params;
  params.topics = j.at("topics").get<int>();
  params.keywords_per_topic = j.at("keywords_per_topic").get<int>();
  params.iterations = j.at("iterations").get<int>();
  params.seed = j.at("seed").get<std::uint64_t>();
  params.alpha = j.at("alpha").get<double>();
  params.beta = j.at("beta").get<double>();
  auto vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  const auto& counts = j.at("topic_word_counts");
  Eigen::MatrixXi topic_word(params.topics, static_cast<Eigen::Index>(vocabulary.size()));
  if (counts.size() != static_cast<std::size_t>(params.topics)) throw DataError("topic model: row count mismatch");
  for (int k = 0; k < params.topics; ++k) {
    const auto& row = counts[static_cast<std::size_t>(k)];
    if (row.size() != vocabulary.size()) throw DataError("topic model: column count mismatch");
    for (std::size_t w = 0; w < vocabulary.size(); ++w) topic_word(k, static_cast<Eigen::Index>(w)) = row[w].get<int>();
  }
  return TopicModel(params, std::move(vocabulary), std::move(topic_word));
}

namespace {

// Draws an index with probability proportional to weights[0..n).
int sample_index(Rng& rng, const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

LdaFit fit_lda(const std::vector<std::vector<std::string>>& documents, const LdaParams& params) {
  params.validate();
  std::set<std::string> vocab_set;
  for (const auto& doc : documents) vocab_set.insert(doc.begin(), doc.end());
  if (vocab_set.empty()) throw DataError("LDA vocabulary is empty after stopword removal");
  std::vector<std::string> vocabulary(vocab_set.begin(), vocab_set.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index[vocabulary[i]] = static_cast<int>(i);

  const int k_topics = params.topics;
  const auto n_docs = static_cast<Eigen::Index>(documents.size());
  const auto n_vocab = static_cast<Eigen::Index>(vocabulary.size());
  const double alpha = params.effective_alpha();
  const double beta = params.beta;
  const double vocab_beta = static_cast<double>(n_vocab) * beta;

  std::vector<std::vector<int>> words(documents.size());
  std::vector<std::vector<int>> assignment(documents.size());
  Eigen::MatrixXi doc_topic = Eigen::MatrixXi::Zero(n_docs, k_topics);
  Eigen::MatrixXi topic_word = Eigen::MatrixXi::Zero(k_topics, n_vocab);
  Eigen::VectorXi topic_total = Eigen::VectorXi::Zero(k_topics);

  Rng rng(params.seed);
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (const auto& token : documents[d]) {
      const int w = index.at(token);
      const int z = static_cast<int>(rng.below(static_cast<std::size_t>(k_topics)));
      words[d].push_back(w);
      assignment[d].push_back(z);
      ++doc_topic(static_cast<Eigen::Index>(d), z);
      ++topic_word(z, w);
      ++topic_total(z);
    }
  }

  std::vector<double> weights(static_cast<std::size_t>(k_topics));
  for (int iter = 0; iter < params.iterations; ++iter) {
    for (std::size_t d = 0; d < documents.size(); ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const int w = words[d][i];
        int z = assignment[d][i];
        --doc_topic(di, z);
        --topic_word(z, w);
        --topic_total(z);
        for (int k = 0; k < k_topics; ++k) {
          weights[static_cast<std::size_t>(k)] = (doc_topic(di, k) + alpha) * (topic_word(k, w) + beta) /
                                                 (topic_total(k) + vocab_beta);
        }
        z = sample_index(rng, weights);
        assignment[d][i] = z;
        ++doc_topic(di, z);
        ++topic_word(z, w);
        ++topic_total(z);
      }
    }
  }

  Eigen::MatrixXd theta = doc_topic.cast<double>().array() + alpha;
  theta.array().colwise() /= theta.rowwise().sum().array();
  return LdaFit{TopicModel(params, std::move(vocabulary), std::move(topic_word)), std::move(theta)};
}

TopicInference infer_topics(const TopicModel& model, const std::vector<std::vector<std::string>>& posts,
                            int iterations, std::uint64_t seed) {
  const int k_topics = model.topics();
  const double alpha = model.params().effective_alpha();
  const Eigen::MatrixXd& phi = model.phi();

  TopicInference result;
  result.theta = Eigen::VectorXd::Zero(k_topics);
  Rng rng(seed);
  std::vector<double> weights(static_cast<std::size_t>(k_topics));

  for (const auto& post : posts) {
    std::vector<int> ids;
    for (const auto& token : post) {
      if (auto id = model.word_id(token)) ids.push_back(*id);
    }
    if (ids.empty()) continue;

    std::vector<int> z(ids.size());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k_topics);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      z[i] = static_cast<int>(rng.below(static_cast<std::size_t>(k_topics)));
      ++counts(z[i]);
    }
    for (int iter = 0; iter < iterations; ++iter) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        --counts(z[i]);
        for (int k = 0; k < k_topics; ++k)
          weights[static_cast<std::size_t>(k)] = (counts(k) + alpha) * phi(k, ids[i]);
        z[i] = sample_index(rng, weights);
        ++counts(z[i]);
      }
    }
    Eigen::Index best = 0;
    counts.maxCoeff(&best);  // first maximum on ties
    result.theta(best) += 1.0;
    ++result.posts_used;
  }

  if (result.posts_used == 0) {
    result.theta = Eigen::VectorXd::Constant(k_topics, 1.0 / k_topics);
    result.out_of_vocabulary = true;
  } else {
    result.theta /= static_cast<double>(result.posts_used);
  }
  return result;
}

}  // namespace panicsim
