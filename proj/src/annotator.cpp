#include "panicsim/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "panicsim/corpus.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/parsers.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/templates.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

using json = nlohmann::json;

namespace {

json yes_no_json(const std::optional<YesNoLabel>& l) {
  if (!l) return nullptr;
  return {{"answer", l->yes ? "yes" : "no"}, {"explanation", l->explanation}};
}

std::optional<YesNoLabel> yes_no_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return YesNoLabel{j.at("answer").get<std::string>() == "yes", j.at("explanation").get<std::string>()};
}

}  // namespace

json to_json(const AnnotationRecord& r) {
  json rounds = json::array();
  for (const auto& v : r.human_rounds) rounds.push_back({{"round", v.round}, {"label", v.panic ? "yes" : "no"}});
  json j;
  j["post_id"] = r.post_id;
  j["text"] = r.text;
  j["llm_relevance"] = yes_no_json(r.llm_relevance);
  j["llm_panic"] = yes_no_json(r.llm_panic);
  j["human_rounds"] = rounds;
  j["final_label"] = r.final_label ? json(std::string(to_string(*r.final_label))) : json(nullptr);
  return j;
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.post_id = j.at("post_id").get<std::string>();
  r.text = j.value("text", "");
  r.llm_relevance = yes_no_from(j.value("llm_relevance", json(nullptr)));
  r.llm_panic = yes_no_from(j.value("llm_panic", json(nullptr)));
  for (const auto& v : j.value("human_rounds", json::array())) {
    r.human_rounds.push_back({v.at("round").get<int>(), v.at("label").get<std::string>() == "yes"});
  }
  if (j.contains("final_label") && !j["final_label"].is_null()) {
    r.final_label = parse_panic_class(j["final_label"].get<std::string>());
  }
  return r;
}

YesNoLabel parse_yes_no_label(const std::string& reply) {
  auto yn = parse_leading_yes_no(reply);
  if (!yn) throw RetryableParseError("reply does not start with Yes or No");
  return {*yn, trim(reply)};
}

std::optional<YesNoLabel> llm_label(const std::string& post_id, const std::string& kind, const std::string& text,
                                    const LlmHandle& llm, const std::string& prompt_template, const std::string& reprompt) {
  auto session = llm.session("annotate/" + post_id + "/" + kind);
  try {
    return ask_parsed(session, render_template(prompt_template, {{"text", text}}), reprompt, llm.params,
                      parse_yes_no_label);
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

PanicClass merge_labels(const AnnotationRecord& record) {
  int human_yes = 0, human_no = 0;
  for (const auto& v : record.human_rounds) (v.panic ? human_yes : human_no)++;
  int yes = human_yes, no = human_no;
  if (record.llm_panic) (record.llm_panic->yes ? yes : no)++;
  if (yes + no == 0) throw DataError("post " + record.post_id + " has no labels to merge");
  if (yes != no) return yes > no ? PanicClass::Panic : PanicClass::NoPanic;
  if (human_yes > human_no) return PanicClass::Panic;
  return PanicClass::NoPanic;
}

std::map<std::string, std::vector<HumanVote>> load_human_rounds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::vector<HumanVote>> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (header.empty()) {
      header = f;
      if (header.size() < 3 || header[0] != "post_id" || header[1] != "round" || header[2] != "label")
        throw DataError(path.string() + ": expected header post_id,round,label");
      continue;
    }
    if (f.size() < 3) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    int round = 0;
    try {
      round = std::stoi(f[1]);
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad round");
    }
    if (round < 1 || round > 3) throw DataError(path.string() + ":" + std::to_string(line_no) + ": round must be 1..3");
    auto cls = parse_panic_class(f[2]);
    if (!cls) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad label '" + f[2] + "'");
    out[f[0]].push_back({round, *cls == PanicClass::Panic});
  }
  for (auto& [id, votes] : out) {
    std::sort(votes.begin(), votes.end(), [](const HumanVote& a, const HumanVote& b) { return a.round < b.round; });
  }
  return out;
}

void EdaConfig::validate() const {
  for (double r : {synonym_rate, swap_rate, delete_rate, insert_rate}) {
    if (r < 0 || r > 1) throw ConfigError("EDA rates must be in [0, 1]");
  }
  if (variants < 1) throw ConfigError("EDA needs at least one variant");
}

json EdaConfig::to_json() const {
  return {{"synonym_rate", synonym_rate}, {"swap_rate", swap_rate}, {"delete_rate", delete_rate},
          {"insert_rate", insert_rate},   {"variants", variants},   {"seed", seed}};
}

EdaConfig EdaConfig::from_json(const json& j) {
  EdaConfig c;
  c.synonym_rate = j.value("synonym_rate", c.synonym_rate);
  c.swap_rate = j.value("swap_rate", c.swap_rate);
  c.delete_rate = j.value("delete_rate", c.delete_rate);
  c.insert_rate = j.value("insert_rate", c.insert_rate);
  c.variants = j.value("variants", c.variants);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<std::string> apply_eda_op(EdaOp op, std::vector<std::string> tokens, double rate, const Thesaurus& thesaurus,
                                      Rng& rng) {
  const std::size_t len = tokens.size();
  if (len == 0) return tokens;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round(rate * static_cast<double>(len))));
  auto synonyms_of = [&](const std::string& w) { return thesaurus.synonyms(to_lower(w)); };

  switch (op) {
    case EdaOp::SynonymReplace: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < len; ++i) {
        if (const auto* s = synonyms_of(tokens[i]); s && !s->empty()) candidates.push_back(i);
      }
      rng.shuffle(candidates);
      for (std::size_t k = 0; k < n && k < candidates.size(); ++k) {
        const auto* s = synonyms_of(tokens[candidates[k]]);
        tokens[candidates[k]] = (*s)[rng.below(s->size())];
      }
      break;
    }
    case EdaOp::RandomSwap:
      if (len >= 2) {
        for (std::size_t k = 0; k < n; ++k) {
          const auto a = rng.below(len);
          const auto b = rng.below(len);
          std::swap(tokens[a], tokens[b]);
        }
      }
      break;
    case EdaOp::RandomDelete:
      for (std::size_t k = 0; k < n && tokens.size() > 1; ++k) {
        tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(tokens.size())));
      }
      break;
    case EdaOp::RandomInsert: {
      std::vector<std::string> pool;
      for (const auto& t : tokens) {
        if (const auto* s = synonyms_of(t)) pool.insert(pool.end(), s->begin(), s->end());
      }
      if (pool.empty()) break;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& word = pool[rng.below(pool.size())];
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(tokens.size() + 1)), word);
      }
      break;
    }
  }
  return tokens;
}

std::vector<std::string> eda_augment(const std::string& text, const EdaConfig& config, const Thesaurus& thesaurus) {
  config.validate();
  const auto tokens = split_whitespace(text);
  std::vector<std::pair<EdaOp, double>> enabled;
  if (config.synonym_rate > 0) enabled.emplace_back(EdaOp::SynonymReplace, config.synonym_rate);
  if (config.swap_rate > 0) enabled.emplace_back(EdaOp::RandomSwap, config.swap_rate);
  if (config.delete_rate > 0) enabled.emplace_back(EdaOp::RandomDelete, config.delete_rate);
  if (config.insert_rate > 0) enabled.emplace_back(EdaOp::RandomInsert, config.insert_rate);

  std::vector<std::string> out;
  Rng rng(config.seed ^ fnv1a64(text));
  for (int i = 0; i < config.variants; ++i) {
    if (enabled.empty() || tokens.empty()) {
      out.push_back(text);
      continue;
    }
    const auto& [op, rate] = enabled[static_cast<std::size_t>(i) % enabled.size()];
    auto variant = join(apply_eda_op(op, tokens, rate, thesaurus, rng), " ");
    out.push_back(variant.empty() ? text : std::move(variant));
  }
  return out;
}

}  // namespace panicsim
