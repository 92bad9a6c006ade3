#include "panicsim/lexicon.hpp"

#include <fstream>
#include <sstream>

#include "panicsim/errors.hpp"
#include "panicsim/text.hpp"

namespace panicsim {
namespace {

// Non-comment, non-blank lines split on tabs, with the 1-based line number.
template <typename Fn>
void for_each_tsv_row(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(trim(field));
    fn(fields, line_no);
  }
}

double parse_weight(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw DataError("lexicon line " + std::to_string(line_no) + ": bad weight '" + text + "'");
  }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

WeightLexicon WeightLexicon::parse(std::istream& in) {
  WeightLexicon lex;
  for_each_tsv_row(in, [&](const std::vector<std::string>& f, std::size_t line_no) {
    if (f.size() < 2) throw DataError("lexicon line " + std::to_string(line_no) + ": expected word<TAB>weight");
    lex.weights_[to_lower(f[0])] = parse_weight(f[1], line_no);
  });
  return lex;
}

WeightLexicon WeightLexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse(in);
}

std::optional<double> WeightLexicon::find(std::string_view word) const {
  auto it = weights_.find(word);
  if (it == weights_.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(Trait trait) {
  switch (trait) {
    case Trait::Openness:
      return "openness";
    case Trait::Conscientiousness:
      return "conscientiousness";
    case Trait::Extraversion:
      return "extraversion";
    case Trait::Agreeableness:
      return "agreeableness";
    case Trait::Neuroticism:
      return "neuroticism";
  }
  return "openness";
}

std::optional<Trait> parse_trait(std::string_view name) {
  const std::string lower = to_lower(name);
  for (Trait t : kTraits) {
    if (lower == to_string(t)) return t;
  }
  return std::nullopt;
}

TraitLexicon TraitLexicon::parse(std::istream& in) {
  TraitLexicon lex;
  for_each_tsv_row(in, [&](const std::vector<std::string>& f, std::size_t line_no) {
    if (f.size() < 3)
      throw DataError("trait lexicon line " + std::to_string(line_no) + ": expected word<TAB>trait<TAB>weight");
    const auto trait = parse_trait(f[1]);
    if (!trait) throw DataError("trait lexicon line " + std::to_string(line_no) + ": unknown trait '" + f[1] + "'");
    auto& weights = lex.weights_[to_lower(f[0])];
    weights[static_cast<std::size_t>(*trait)] += parse_weight(f[2], line_no);
  });
  return lex;
}

TraitLexicon TraitLexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse(in);
}

const TraitLexicon::Weights* TraitLexicon::find(std::string_view word) const {
  auto it = weights_.find(word);
  return it == weights_.end() ? nullptr : &it->second;
}

std::set<std::string> parse_word_list(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.insert(to_lower(w));
  }
  return words;
}

std::set<std::string> load_word_list(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_word_list(in);
}

Thesaurus Thesaurus::parse(std::istream& in) {
  Thesaurus th;
  for_each_tsv_row(in, [&](const std::vector<std::string>& f, std::size_t line_no) {
    if (f.size() < 2) throw DataError("thesaurus line " + std::to_string(line_no) + ": expected word<TAB>synonyms");
    std::vector<std::string> synonyms;
    std::stringstream ss(f[1]);
    std::string s;
    while (std::getline(ss, s, ',')) {
      s = trim(s);
      if (!s.empty()) synonyms.push_back(to_lower(s));
    }
    if (!synonyms.empty()) th.entries_[to_lower(f[0])] = std::move(synonyms);
  });
  return th;
}

Thesaurus Thesaurus::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse(in);
}

const std::vector<std::string>* Thesaurus::synonyms(std::string_view word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Thesaurus::to_tsv() const {
  std::string out;
  for (const auto& [word, syns] : entries_) out += word + "\t" + join(syns, ",") + "\n";
  return out;
}

}  // namespace panicsim
