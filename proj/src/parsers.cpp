#include "panicsim/parsers.hpp"

#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

std::vector<PpdtsItem> parse_ppdts_items(const json& j) {
  std::vector<PpdtsItem> items;
  for (const auto& row : j) {
    items.push_back({row.at("id").get<int>(), row.at("subscale").get<std::string>(), row.at("text").get<std::string>()});
  }
  if (items.size() != 18) throw DataError("questionnaire must have 18 items, found " + std::to_string(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const std::string expected = i < 10 ? "KA" : "AAM";
    if (it.id != static_cast<int>(i) + 1) throw DataError("questionnaire ids must run 1..18 in order");
    if (it.subscale != expected) throw DataError("item " + std::to_string(it.id) + " must belong to " + expected);
    if (trim(it.text).empty()) throw DataError("item " + std::to_string(it.id) + " has no text");
  }
  return items;
}

std::vector<PpdtsItem> load_ppdts_items(const std::filesystem::path& path) { return parse_ppdts_items(read_json_file(path)); }

std::string render_ppdts_questions(const std::vector<PpdtsItem>& items) {
  std::string out;
  for (const auto& it : items) out += "\nQ" + std::to_string(it.id) + ": " + it.text;
  return out;
}

namespace {

std::vector<std::string> clean_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    std::erase(line, '*');
    std::erase(line, '\r');
    lines.push_back(std::move(line));
  }
  return lines;
}

// Text between the first '(' and the last ')' of the tail, or the tail
// itself minus separators when it has no parentheses.
std::string extract_reason(const std::string& tail) {
  const auto open = tail.find('(');
  const auto close = tail.rfind(')');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    return trim(std::string_view(tail).substr(open + 1, close - open - 1));
  }
  std::string r = trim(tail);
  while (!r.empty() && (r.back() == ';' || r.back() == '.' || r.back() == ',')) r.pop_back();
  while (!r.empty() && (r.front() == '-' || r.front() == ':')) r.erase(0, 1);
  return trim(r);
}

}  // namespace

PpdtsResponse parse_ppdts(std::string_view text, int required, int item_count) {
  static const std::regex line_re(R"(^\s*(?:-\s*)?(?:\d+\s*[.)]\s*)?Q\s*(\d+)\s*[:.]\s*(\d+)(?![\d.])(.*)$)",
                                  std::regex::icase);
  PpdtsResponse r;
  for (const auto& line : clean_lines(text)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    const int id = std::stoi(m[1].str().substr(0, 6));
    const auto score_text = m[2].str();
    if (score_text.size() > 1) continue;
    const int score = score_text[0] - '0';
    if (id < 1 || id > item_count || score < 1 || score > 4) continue;
    if (r.scores.count(id)) continue;
    r.scores[id] = score;
    r.reasons[id] = extract_reason(m[3].str());
  }
  r.answered_count = static_cast<int>(r.scores.size());
  r.valid = r.answered_count >= required;
  return r;
}

std::string render_ppdts_answers(const PpdtsResponse& response) {
  std::string out;
  for (const auto& [id, score] : response.scores) {
    auto it = response.reasons.find(id);
    out += "Q" + std::to_string(id) + ": " + std::to_string(score) + " (" +
           (it == response.reasons.end() ? std::string() : it->second) + ")\n";
  }
  return out;
}

std::string_view to_string(ArousalFactor f) {
  switch (f) {
    case ArousalFactor::Awareness: return "awareness";
    case ArousalFactor::Coping: return "coping";
    case ArousalFactor::Uncertainty: return "uncertainty";
    default: return "novelty";
  }
}

ArousalReading parse_arousal(std::string_view text) {
  static const std::regex line_re(R"(^\s*(?:-\s*)?(?:\d+\s*[.)]\s*)?([A-Za-z][A-Za-z ,&/\-]*?)\s*:\s*(\d+)\s*/\s*5(?!\d)(.*)$)");
  static const std::regex pct_re(R"(\[\s*(\d{1,3}(?:\.\d+)?)\s*%\s*\])");
  ArousalReading reading;
  std::array<bool, 4> seen{};
  for (const auto& line : clean_lines(text)) {
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      const std::string name = to_lower(trim(m[1].str()));
      for (auto f : kArousalFactors) {
        const auto idx = static_cast<std::size_t>(f);
        if (!name.starts_with(to_string(f)) || seen[idx]) continue;
        const auto digits = m[2].str();
        const int score = digits.size() > 1 ? 99 : digits[0] - '0';
        if (score < 1 || score > 5) throw ArousalParseError("factor out of range: " + trim(line));
        seen[idx] = true;
        reading.factors.scores[idx] = {score, extract_reason(m[3].str())};
      }
    }
    for (auto it = std::sregex_iterator(line.begin(), line.end(), pct_re); it != std::sregex_iterator(); ++it) {
      const double v = std::stod((*it)[1].str());
      if (v <= 100.0) reading.reported_probability = v / 100.0;
    }
  }
  for (auto f : kArousalFactors) {
    if (!seen[static_cast<std::size_t>(f)]) throw ArousalParseError("arousal reply lacks the " + std::string(to_string(f)) + " factor");
  }
  return reading;
}

std::string render_arousal(const ArousalReading& reading) {
  static const std::array<const char*, 4> names = {"Awareness", "Coping", "Uncertainty", "Novelty"};
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& s = reading.factors.scores[i];
    out += std::string(names[i]) + ": " + std::to_string(s.score) + "/5 (" + s.reason + ")\n";
  }
  if (reading.reported_probability) {
    std::ostringstream pct;
    pct << *reading.reported_probability * 100.0;
    out += "[" + pct.str() + "%]\n";
  }
  return out;
}

double fallback_probability(const ArousalFactors& factors) {
  double p = 0;
  for (const auto& s : factors.scores) p += 0.25 * (s.score - 1) / 4.0;
  return p;
}

std::vector<std::string> extract_hashtags(std::string_view text) {
  std::vector<std::string> tags;
  for (auto token : split_whitespace(text)) {
    if (token.size() < 2 || token[0] != '#') continue;
    std::size_t end = 1;
    while (end < token.size() && (std::isalnum(static_cast<unsigned char>(token[end])) || token[end] == '_')) ++end;
    if (end > 1) tags.push_back(token.substr(0, end));
  }
  return tags;
}

std::vector<TweetCandidate> parse_tweets(std::string_view text, int n, bool require_terminator) {
  static const std::regex end_re(R"(#{3}\s*end\b)", std::regex::icase);
  std::string body(text);
  std::smatch m;
  if (std::regex_search(body, m, end_re)) {
    body = body.substr(0, static_cast<std::size_t>(m.position(0)));
  } else if (require_terminator) {
    throw GenerationParseError("generation reply lacks the '### End' terminator");
  }
  std::vector<TweetCandidate> out;
  std::size_t pos = 0;
  while (static_cast<int>(out.size()) < n) {
    const auto open = body.find('[', pos);
    if (open == std::string::npos) break;
    const auto close = body.find(']', open + 1);
    if (close == std::string::npos) break;
    std::string seg = trim(std::string_view(body).substr(open + 1, close - open - 1));
    while (!seg.empty() && (seg.front() == '"' || seg.front() == '\'')) seg.erase(0, 1);
    while (!seg.empty() && (seg.back() == '"' || seg.back() == '\'')) seg.pop_back();
    seg = trim(seg);
    if (!seg.empty()) {
      TweetCandidate c;
      c.text = seg;
      c.hashtags = extract_hashtags(seg);
      out.push_back(std::move(c));
    }
    pos = close + 1;
  }
  if (out.empty()) throw GenerationParseError("generation reply has no bracketed tweet");
  return out;
}

std::string render_tweets(const std::vector<std::string>& texts) {
  std::string out;
  for (const auto& t : texts) out += "[" + t + "]\n";
  return out + std::string(kTweetTerminator);
}

std::string_view to_string(Expert e) {
  switch (e) {
    case Expert::Psychological: return "psychological";
    case Expert::Linguistic: return "linguistic";
    case Expert::Factual: return "factual";
    default: return "emotional";
  }
}

bool ExpertVerdict::passed() const {
  for (const auto& o : opinions) {
    if (!o.pass) return false;
  }
  return true;
}

namespace {

std::optional<Expert> expert_from_name(const std::string& lower) {
  if (lower.starts_with("psych")) return Expert::Psychological;
  if (lower.starts_with("ling")) return Expert::Linguistic;
  if (lower.starts_with("fact")) return Expert::Factual;
  if (lower.starts_with("panic") || lower.starts_with("emotion")) return Expert::Emotional;
  return std::nullopt;
}

}  // namespace

ExpertVerdict parse_verdict(std::string_view text) {
  static const std::regex line_re(R"(^\s*(?:-\s*)?(?:\d+\s*[.)]\s*)?([A-Za-z][A-Za-z /&\-]*?)\s*:\s*(yes|no)\b(.*)$)",
                                  std::regex::icase);
  ExpertVerdict v;
  std::array<bool, 4> seen{};
  for (const auto& line : clean_lines(text)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    auto e = expert_from_name(to_lower(trim(m[1].str())));
    if (!e) continue;
    const auto idx = static_cast<std::size_t>(*e);
    if (seen[idx]) continue;
    seen[idx] = true;
    v.opinions[idx] = {to_lower(m[2].str()) == "yes", extract_reason(m[3].str())};
  }
  for (auto e : kExperts) {
    if (!seen[static_cast<std::size_t>(e)])
      throw VerdictParseError("verdict lacks the " + std::string(to_string(e)) + " expert line");
  }
  return v;
}

std::string render_verdict(const ExpertVerdict& verdict) {
  static const std::array<const char*, 4> names = {"Psychological", "Linguistic", "Factual", "Panic"};
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& o = verdict.opinions[i];
    out += std::string(names[i]) + ": " + (o.pass ? "YES" : "NO") + " (" + o.reason + ")\n";
  }
  return out;
}

std::optional<bool> parse_leading_yes_no(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) {
    const char c = text[i];
    if (!(std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '*' || c == '#' ||
          c == '-' || c == '_' || c == '`' || c == '>'))
      return std::nullopt;
    ++i;
  }
  std::size_t j = i;
  while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
  const std::string word = to_lower(text.substr(i, j - i));
  if (word == "yes") return true;
  if (word == "no") return false;
  return std::nullopt;
}

}  // namespace panicsim
