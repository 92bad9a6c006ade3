#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace panicsim {

/// word -> weight, read from a TSV of "word<TAB>weight" lines ('#' starts a comment).
class WeightLexicon {
 public:
  WeightLexicon() = default;
  explicit WeightLexicon(const std::map<std::string, double>& weights)
      : weights_(weights.begin(), weights.end()) {}

  static WeightLexicon parse(std::istream& in);
  static WeightLexicon load(const std::filesystem::path& path);

  std::optional<double> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }
  std::size_t size() const { return weights_.size(); }
  const std::map<std::string, double, std::less<>>& entries() const { return weights_; }

 private:
  std::map<std::string, double, std::less<>> weights_;
};

enum class Trait { Openness, Conscientiousness, Extraversion, Agreeableness, Neuroticism };
inline constexpr std::array<Trait, 5> kTraits = {Trait::Openness, Trait::Conscientiousness,
                                                 Trait::Extraversion, Trait::Agreeableness,
                                                 Trait::Neuroticism};
std::string_view to_string(Trait trait);
std::optional<Trait> parse_trait(std::string_view name);

/// word -> per-trait weights, read from "word<TAB>trait<TAB>weight" lines.
class TraitLexicon {
 public:
  using Weights = std::array<double, 5>;

  static TraitLexicon parse(std::istream& in);
  static TraitLexicon load(const std::filesystem::path& path);

  const Weights* find(std::string_view word) const;
  std::size_t size() const { return weights_.size(); }

 private:
  std::map<std::string, Weights, std::less<>> weights_;
};

/// One word per line; blank lines and '#' comments ignored.
std::set<std::string> load_word_list(const std::filesystem::path& path);
std::set<std::string> parse_word_list(std::istream& in);

/// word -> synonyms, read from "word<TAB>syn1,syn2,..." lines.
class Thesaurus {
 public:
  static Thesaurus parse(std::istream& in);
  static Thesaurus load(const std::filesystem::path& path);

  const std::vector<std::string>* synonyms(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  std::string to_tsv() const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

}  // namespace panicsim
