#include "panicsim/text.hpp"

#include <cctype>
#include <cmath>
#include <map>

namespace panicsim {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_handle_char(char c) { return is_alnum(c) || c == '_'; }

// Length of a leading "RT @handle:" marker (with trailing blanks), or 0.
std::size_t retweet_marker_length(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  if (i + 2 > text.size() || text[i] != 'R' || text[i + 1] != 'T') return 0;
  i += 2;
  const std::size_t after_rt = i;
  while (i < text.size() && is_space(text[i])) ++i;
  if (i == after_rt || i >= text.size() || text[i] != '@') return 0;
  ++i;
  const std::size_t handle_start = i;
  while (i < text.size() && is_handle_char(text[i])) ++i;
  if (i == handle_start || i >= text.size() || text[i] != ':') return 0;
  ++i;
  while (i < text.size() && is_space(text[i])) ++i;
  return i;
}

bool url_starts_at(std::string_view text, std::size_t pos) {
  const std::string_view rest = text.substr(pos);
  return starts_with_icase(rest, "http://") || starts_with_icase(rest, "https://") ||
         starts_with_icase(rest, "www.");
}

std::map<std::string, int> term_frequencies(std::string_view text) {
  std::map<std::string, int> tf;
  for (auto& token : split_whitespace(text)) ++tf[to_lower(token)];
  return tf;
}

}  // namespace

std::string sanitize_text(std::string_view text) {
  text.remove_prefix(retweet_marker_length(text));

  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool token_start = (i == 0 || is_space(text[i - 1]));
    if (token_start && url_starts_at(text, i)) {
      while (i < text.size() && !is_space(text[i])) ++i;
      pending_space = true;
      continue;
    }
    const char c = text[i++];
    if (is_alnum(c) && static_cast<unsigned char>(c) < 0x80) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int meaningful_token_count(std::string_view text) {
  int count = 0;
  for (const auto& token : split_whitespace(text)) {
    int letters = 0;
    for (char c : token) letters += is_alpha(c) ? 1 : 0;
    if (letters >= 2) ++count;
  }
  return count;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if ((is_alnum(c) && static_cast<unsigned char>(c) < 0x80) || c == '\'') {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double tf_cosine(std::string_view a, std::string_view b) {
  const auto ta = term_frequencies(a);
  const auto tb = term_frequencies(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [term, count] : ta) {
    na += static_cast<double>(count) * count;
    if (auto it = tb.find(term); it != tb.end()) dot += static_cast<double>(count) * it->second;
  }
  for (const auto& [term, count] : tb) nb += static_cast<double>(count) * count;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool near_duplicate(std::string_view a, std::string_view b, double threshold) {
  return tf_cosine(a, b) > threshold;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string join(const std::vector<std::string>& parts, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += separator;
    out += parts[i];
  }
  return out;
}

bool starts_with_icase(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

}  // namespace panicsim
