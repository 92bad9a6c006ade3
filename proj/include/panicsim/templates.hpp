#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace panicsim {

/// Placeholders are {name} with name made of lowercase letters, digits and
/// underscores. Any other brace text is literal.
std::set<std::string> template_placeholders(const std::string& text);

/// Substitutes every placeholder; throws TemplateError naming any that has
/// no value.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& values);

/// Named template texts loaded from "<dir>/<name>.txt".
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  bool contains(const std::string& name) const { return texts_.count(name) != 0; }
  void set(const std::string& name, std::string text) { texts_[name] = std::move(text); }

  std::string render(const std::string& name, const std::map<std::string, std::string>& values) const {
    return render_template(get(name), values);
  }

 private:
  std::map<std::string, std::string> texts_;
};

}  // namespace panicsim
