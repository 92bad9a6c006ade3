#include "panicsim/templates.hpp"

#include <algorithm>

#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"

namespace panicsim {

namespace {

bool name_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

// Length of the placeholder starting at text[pos] == '{', or 0.
std::size_t placeholder_length(const std::string& text, std::size_t pos) {
  std::size_t i = pos + 1;
  while (i < text.size() && name_char(text[i])) ++i;
  if (i == pos + 1 || i >= text.size() || text[i] != '}') return 0;
  return i - pos + 1;
}

}  // namespace

std::set<std::string> template_placeholders(const std::string& text) {
  std::set<std::string> names;
  for (std::size_t pos = text.find('{'); pos != std::string::npos; pos = text.find('{', pos + 1)) {
    if (auto len = placeholder_length(text, pos)) names.insert(text.substr(pos + 1, len - 2));
  }
  return names;
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::set<std::string> missing;
  std::size_t last = 0;
  for (std::size_t pos = text.find('{'); pos != std::string::npos; pos = text.find('{', pos + 1)) {
    const auto len = placeholder_length(text, pos);
    if (!len) continue;
    const std::string name = text.substr(pos + 1, len - 2);
    auto it = values.find(name);
    if (it == values.end()) {
      missing.insert(name);
      continue;
    }
    out.append(text, last, pos - last);
    out += it->second;
    last = pos + len;
    pos = last - 1;
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw TemplateError("unresolved template placeholder(s): " + names);
  }
  out.append(text, last, std::string::npos);
  return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
  TemplateSet set;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::string text = read_text_file(entry.path());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    set.texts_[entry.path().stem().string()] = std::move(text);
  }
  return set;
}

const std::string& TemplateSet::get(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw TemplateError("missing template '" + name + "'");
  return it->second;
}

}  // namespace panicsim
