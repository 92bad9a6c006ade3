#include "panicsim/app.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "panicsim/annotator.hpp"
#include "panicsim/corpus.hpp"
#include "panicsim/discriminator.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/http_provider.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/lda.hpp"
#include "panicsim/lexicon.hpp"
#include "panicsim/mock_provider.hpp"
#include "panicsim/rng.hpp"
#include "panicsim/text.hpp"
#include "panicsim/themes.hpp"

namespace panicsim {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::shared_ptr<ChatProvider> make_provider(const RunConfig& config) {
  if (config.mock_script) {
    auto mock = std::make_shared<MockProvider>(MockScript::load(config.resolve(*config.mock_script)));
    return std::make_shared<GatedProvider>(mock, config.max_in_flight);
  }
  if (config.provider) return std::make_shared<HttpProvider>(*config.provider);
  throw ConfigError("no provider configured: set \"provider\" or \"mock_script\"");
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::map<std::string, PanicClass> load_user_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, PanicClass> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (header) {
      if (f.size() < 2 || f[0] != "user_id" || f[1] != "label")
        throw DataError(path.string() + ": expected header user_id,label");
      header = false;
      continue;
    }
    if (f.size() < 2) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    auto cls = parse_panic_class(f[1]);
    if (!cls) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad label '" + f[1] + "'");
    out[f[0]] = *cls;
  }
  return out;
}

void write_transcript(const fs::path& path, std::vector<TranscriptRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const TranscriptRecord& a, const TranscriptRecord& b) {
    return std::tie(a.session_tag, a.turn) < std::tie(b.session_tag, b.turn);
  });
  std::vector<json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

namespace {

std::vector<UserTimeline> load_timelines(const RunConfig& config) {
  const auto path = config.out(kTimelinesFile);
  if (!fs::exists(path)) throw DataError("no timeline store at " + path.string() + "; run ingest first");
  std::vector<UserTimeline> out;
  for (const auto& row : read_jsonl(path)) out.push_back(row.get<UserTimeline>());
  return out;
}

CorpusPartition load_partition(const RunConfig& config) {
  return read_json_file(config.out(kPartitionFile)).get<CorpusPartition>();
}

std::map<std::string, UserProfile> load_profiles(const RunConfig& config) {
  const auto path = config.out(kProfilesFile);
  if (!fs::exists(path)) throw DataError("no profile store at " + path.string() + "; run profile first");
  std::map<std::string, UserProfile> out;
  for (const auto& row : read_jsonl(path)) {
    auto p = profile_from_json(row);
    out[p.user_id] = std::move(p);
  }
  return out;
}

std::map<std::string, StageTrace> load_traces(const fs::path& path) {
  std::map<std::string, StageTrace> out;
  for (const auto& row : read_jsonl(path)) {
    auto t = trace_from_json(row);
    out[t.user_id] = std::move(t);
  }
  return out;
}

std::vector<std::string> default_query_terms(const RunConfig& config) {
  if (!config.query_terms.empty()) return config.query_terms;
  const auto words = load_word_list(config.asset("hurricane_keywords.txt"));
  return {words.begin(), words.end()};
}

std::vector<TranscriptRecord> read_transcript(const fs::path& path) {
  std::vector<TranscriptRecord> out;
  for (const auto& row : read_jsonl(path)) out.push_back(transcript_from_json(row));
  return out;
}

}  // namespace

// ingest

json IngestStats::to_json() const {
  return {{"rows_read", rows_read},         {"malformed", malformed},   {"short_posts", short_posts},
          {"duplicates", duplicates},       {"posts_kept", posts_kept}, {"users_total", users_total},
          {"users_retained", users_retained}, {"train", train},         {"test", test},
          {"labeled_users", labeled_users}};
}

IngestStats run_ingest(const RunConfig& config, std::ostream& log) {
  if (config.disaster_time == 0) throw ConfigError("corpus.disaster_time is required");
  IngestStats stats;
  auto loaded = load_posts(config.resolve(config.posts));
  stats.rows_read = loaded.rows_read;
  stats.malformed = loaded.malformed.size();
  for (const auto& m : loaded.malformed) log << "malformed row at line " << m.line << ": " << m.reason << "\n";
  if (stats.rows_read > 0 &&
      static_cast<double>(stats.malformed) > config.max_malformed_fraction * static_cast<double>(stats.rows_read)) {
    throw DataError(std::to_string(stats.malformed) + " of " + std::to_string(stats.rows_read) +
                    " rows are malformed, above the allowed fraction");
  }

  std::vector<RawPost> clean;
  for (auto& p : loaded.posts) {
    p.text = sanitize_text(p.text);
    if (meaningful_token_count(p.text) < config.min_tokens) {
      ++stats.short_posts;
      continue;
    }
    clean.push_back(std::move(p));
  }
  std::stable_sort(clean.begin(), clean.end(), [](const RawPost& a, const RawPost& b) {
    return std::tie(a.timestamp, a.post_id) < std::tie(b.timestamp, b.post_id);
  });
  auto dedup = dedup_corpus(clean, config.dedup_threshold);
  stats.duplicates = dedup.dropped.size();
  stats.posts_kept = dedup.kept.size();

  auto timelines = build_timelines(dedup.kept, config.disaster_time);
  stats.users_total = timelines.size();
  auto selected = select_users(timelines, config.min_pre_posts);
  stats.users_retained = selected.size();

  if (config.labels) {
    const auto labels = load_user_labels(config.resolve(*config.labels));
    for (auto& t : selected) {
      if (auto it = labels.find(t.user_id); it != labels.end()) {
        t.ground_truth = PanicLabel{it->second, it->second == PanicClass::Panic ? 1.0 : 0.0};
        ++stats.labeled_users;
      }
    }
  }

  std::vector<std::string> ids;
  for (const auto& t : selected) ids.push_back(t.user_id);
  const auto partition = split_train_test(ids, config.split_ratio, config.seed);
  stats.train = partition.train.size();
  stats.test = partition.test.size();

  std::vector<json> rows;
  for (const auto& t : selected) rows.push_back(t);
  write_jsonl(config.out(kTimelinesFile), rows);
  write_json_file(config.out(kPartitionFile), partition);
  write_json_file(config.out(kIngestStatsFile), stats.to_json());
  log << "ingest: " << stats.rows_read << " rows, " << stats.posts_kept << " posts kept, " << stats.users_retained
      << " of " << stats.users_total << " users retained (" << stats.train << " train / " << stats.test << " test)\n";
  return stats;
}

// profile

ProfileStats run_profile(const RunConfig& config, std::ostream& log) {
  ProfileStats stats;
  const auto timelines = load_timelines(config);
  const auto partition = load_partition(config);
  const auto stopwords = load_word_list(config.asset("stopwords.txt"));
  const auto templates = TemplateSet::load(config.asset("templates"));
  const auto disaster = load_disaster_csv(config.resolve(config.disaster_context));

  std::vector<std::vector<std::string>> docs;
  for (const auto& t : timelines) {
    if (!partition.train.count(t.user_id)) continue;
    for (const auto& p : t.pre_posts) {
      auto tokens = topic_tokens(p.text, stopwords);
      if (!tokens.empty()) docs.push_back(std::move(tokens));
    }
  }
  const json key{{"docs", docs},
                 {"topics", config.lda.topics},
                 {"keywords", config.lda.keywords_per_topic},
                 {"iterations", config.lda.iterations},
                 {"seed", config.lda.seed},
                 {"alpha", config.lda.effective_alpha()},
                 {"beta", config.lda.beta}};
  stats.lda_path = config.out("lda-" + hex64(fnv1a64(key.dump())) + ".json");
  TopicModel model;
  if (fs::exists(stats.lda_path)) {
    model = TopicModel::from_json(read_json_file(stats.lda_path));
    stats.lda_cache_hit = true;
    log << "profile: reusing topic model " << stats.lda_path.filename().string() << "\n";
  } else {
    model = fit_lda(docs, config.lda).model;
    write_json_file(stats.lda_path, model.to_json());
    log << "profile: fitted topic model on " << docs.size() << " posts\n";
  }

  std::shared_ptr<ChatProvider> provider;
  auto transcript = std::make_shared<Transcript>();
  const bool needs_llm = config.tone || config.personality_backend == "llm" || config.sentiment_backend == "llm" ||
                         config.theme_mode == "llm";
  if (needs_llm) provider = make_provider(config);
  const LlmHandle llm{provider, transcript, config.agent.analysis};
  const std::string reprompt = templates.contains("reprompt") ? templates.get("reprompt") : std::string();

  const auto keywords = model.top_keywords();
  const auto static_themes = StaticThemeConfig::load(config.asset("themes.json"));
  ThemeMembership membership;
  if (config.theme_mode == "llm") {
    auto r = consolidate_llm(keywords, templates.get("theme_consolidation"), reprompt, provider, transcript,
                             config.agent.analysis, static_themes);
    membership = std::move(r.membership);
    stats.themes_fell_back = r.fell_back_to_static;
    if (r.fell_back_to_static) log << "profile: theme consolidation reply unusable, used static mapping\n";
  } else {
    membership = consolidate_static(keywords, static_themes);
  }
  json themes_json = membership.to_json();
  themes_json["keywords"] = keywords;
  write_json_file(config.out(kThemesFile), themes_json);

  std::unique_ptr<PersonalityScorer> personality;
  if (config.personality_backend == "lexicon") {
    personality = std::make_unique<LexiconPersonalityScorer>(TraitLexicon::load(config.asset("personality_lexicon.tsv")));
  } else if (config.personality_backend == "llm") {
    personality = std::make_unique<LlmPersonalityScorer>(llm, templates.get("personality_llm"), reprompt);
  } else {
    personality = std::make_unique<ExternalPersonalityScorer>(config.personality_endpoint);
  }
  std::unique_ptr<SentimentClassifier> sentiment;
  if (config.sentiment_backend == "lexicon") {
    sentiment = std::make_unique<LexiconSentimentClassifier>(WeightLexicon::load(config.asset("sentiment_lexicon.tsv")));
  } else {
    sentiment = std::make_unique<LlmSentimentClassifier>(llm, templates.get("sentiment_llm"), reprompt);
  }

  ProfileContext ctx;
  ctx.disaster = &disaster;
  ctx.disaster_time = config.disaster_time;
  ctx.personality = personality.get();
  ctx.sentiment = sentiment.get();
  ctx.topics = &model;
  ctx.themes = &membership;
  ctx.stopwords = &stopwords;
  if (config.tone) {
    ctx.tone_llm = llm;
    ctx.tone_template = templates.get("tone");
  }
  ctx.reprompt = reprompt;
  ctx.query_terms = default_query_terms(config);
  ctx.relevant_k = config.relevant_k;
  ctx.seed = config.seed;

  std::vector<UserProfile> profiles(timelines.size());
  parallel_for(timelines.size(), config.max_in_flight,
               [&](std::size_t i) { profiles[i] = build_profile(timelines[i], ctx); });

  std::vector<json> rows;
  for (const auto& p : profiles) rows.push_back(to_json(p));
  write_jsonl(config.out(kProfilesFile), rows);
  if (needs_llm) write_transcript(config.out(kProfileTranscriptFile), transcript->records());
  stats.profiles = profiles.size();
  log << "profile: wrote " << stats.profiles << " profiles\n";
  return stats;
}

// simulate

SimulateStats run_simulate(const RunConfig& config, bool resume, std::ostream& log) {
  SimulateStats stats;
  const auto partition = load_partition(config);
  const auto profiles = load_profiles(config);
  AgentAssets assets{PsychKnowledge::load(config.asset("knowledge.md")), load_ppdts_items(config.asset("ppdts.json")),
                     TemplateSet::load(config.asset("templates")),
                     load_disaster_csv(config.resolve(config.disaster_context))};
  auto provider = make_provider(config);

  const auto traces_path = config.out(kTracesFile);
  const auto transcript_path = config.out(kTranscriptFile);
  std::set<std::string> done;
  if (resume) {
    for (const auto& [id, _] : load_traces(traces_path)) done.insert(id);
  } else {
    write_jsonl(traces_path, {});
    write_jsonl(transcript_path, {});
  }

  std::vector<std::string> pending;
  for (const auto& id : partition.test) {
    if (done.count(id)) {
      ++stats.resumed;
    } else {
      pending.push_back(id);
    }
  }
  stats.users = partition.test.size();
  log << "simulate: " << pending.size() << " users to run, " << stats.resumed << " already done\n";

  std::mutex store_mutex;
  std::size_t finished = 0;
  parallel_for(pending.size(), config.max_in_flight, [&](std::size_t i) {
    const auto& id = pending[i];
    auto transcript = std::make_shared<Transcript>();
    StageTrace trace;
    if (auto it = profiles.find(id); it != profiles.end()) {
      trace = run_user_pipeline(it->second, assets, LlmHandle{provider, transcript, config.agent.analysis}, config.agent);
    } else {
      trace.user_id = id;
      trace.outcome = Outcome::Failed;
      trace.reason = "no profile for user";
    }
    std::vector<json> records;
    for (const auto& r : transcript->records()) records.push_back(to_json(r));
    std::lock_guard lock(store_mutex);
    write_jsonl(traces_path, {to_json(trace)}, true);
    write_jsonl(transcript_path, records, true);
    ++finished;
    log << "[" << finished << "/" << pending.size() << "] " << id << " " << to_string(trace.outcome)
        << (trace.reason.empty() ? "" : " (" + trace.reason + ")") << "\n";
  });

  // compact both stores into a canonical order
  const auto traces = load_traces(traces_path);
  std::vector<json> rows;
  for (const auto& [id, t] : traces) {
    rows.push_back(to_json(t));
    stats.outcomes[std::string(to_string(t.outcome))]++;
  }
  write_jsonl(traces_path, rows);
  std::map<std::pair<std::string, std::size_t>, TranscriptRecord> unique;
  for (auto& r : read_transcript(transcript_path)) unique[{r.session_tag, r.turn}] = std::move(r);
  std::vector<TranscriptRecord> records;
  for (auto& [_, r] : unique) records.push_back(std::move(r));
  write_transcript(transcript_path, std::move(records));
  stats.ran = pending.size();

  log << "simulate: outcomes";
  for (const auto& [outcome, n] : stats.outcomes) log << " " << outcome << "=" << n;
  log << "\n";
  return stats;
}

// evaluate

EvalReport run_evaluate(const RunConfig& config, std::ostream& log) {
  const auto traces = load_traces(config.out(kTracesFile));
  if (traces.empty()) throw DataError("no traces found; run simulate first");
  std::map<std::string, UserTimeline> timelines;
  for (auto& t : load_timelines(config)) timelines[t.user_id] = std::move(t);

  auto transcript = std::make_shared<Transcript>();
  std::unique_ptr<PanicClassifier> classifier;
  bool used_llm = false;
  if (config.discriminator_backend == "rule") {
    classifier = std::make_unique<RuleClassifier>(WeightLexicon::load(config.asset("panic_lexicon.tsv")),
                                                  RuleWeights::load(config.asset("discriminator_rule.json")));
  } else if (config.discriminator_backend == "llm") {
    const auto templates = TemplateSet::load(config.asset("templates"));
    classifier = std::make_unique<LlmClassifier>(LlmHandle{make_provider(config), transcript, config.agent.analysis},
                                                 templates.get("annotate_panic"), templates.get("reprompt"));
    used_llm = true;
  } else {
    classifier = std::make_unique<ExternalClassifier>(config.discriminator_endpoint);
  }

  std::map<std::string, PanicClass> predictions, truths;
  std::map<std::string, double> ranking;
  std::map<std::string, long> exclusions;
  long unverified = 0;
  std::vector<json> rows;
  for (const auto& [id, trace] : traces) {
    json row{{"user_id", id}, {"outcome", std::string(to_string(trace.outcome))}};
    auto exclude = [&](const std::string& reason) {
      exclusions[reason]++;
      row["excluded"] = reason;
      rows.push_back(row);
    };
    if (!trace.predictable()) {
      exclude(std::string(to_string(trace.outcome)));
      continue;
    }
    std::optional<PanicClass> truth;
    auto tl = timelines.find(id);
    try {
      if (config.ground_truth_mode == "labels") {
        if (tl != timelines.end() && tl->second.ground_truth) truth = tl->second.ground_truth->label;
      } else if (tl != timelines.end() && !tl->second.post_posts.empty()) {
        truth = label_from_posts(tl->second, *classifier).label;
      }
    } catch (const ClassificationUnavailable&) {
    }
    if (!truth) {
      exclude("no-ground-truth");
      continue;
    }
    std::optional<UserPrediction> pred;
    try {
      pred = predict_user(trace, *classifier);
    } catch (const ClassificationUnavailable&) {
      exclude("classification-unavailable");
      continue;
    }
    if (!pred) {
      exclude("no-generated-posts");
      continue;
    }
    if (trace.outcome == Outcome::UnverifiedAccepted) ++unverified;
    predictions[id] = pred->label.label;
    truths[id] = *truth;
    ranking[id] = pred->ranking_score;
    row["label"] = std::string(to_string(pred->label.label));
    row["score"] = pred->label.score;
    row["ranking_score"] = pred->ranking_score;
    row["truth"] = std::string(to_string(*truth));
    rows.push_back(row);
  }
  write_jsonl(config.out(kPredictionsFile), rows);
  if (used_llm) write_transcript(config.out(kEvaluateTranscriptFile), transcript->records());

  auto report = build_report(predictions, truths, ranking, exclusions);
  report.traces = static_cast<long>(traces.size());
  report.unverified_accepted = unverified;
  // the output location is not part of the experiment
  auto effective = config.to_json();
  effective.erase("out_dir");
  auto overrides = config_overrides(config);
  overrides.erase("out_dir");
  report.config_echo = {{"effective", effective}, {"overrides", overrides}, {"discriminator", classifier->name()}};
  emit_report(report, config.out(kReportJsonFile), config.out(kReportCsvFile));
  log << "evaluate: " << report.evaluated << " of " << report.traces << " users evaluated";
  for (const auto& [reason, n] : report.exclusions) log << ", " << reason << "=" << n;
  log << "\n" << report_csv(report);
  return report;
}

// annotate

AnnotateStats run_annotate(const RunConfig& config, bool resume, std::ostream& log) {
  AnnotateStats stats;
  const auto timelines = load_timelines(config);
  const auto templates = TemplateSet::load(config.asset("templates"));
  const auto thesaurus = Thesaurus::load(config.asset("thesaurus.tsv"));
  std::map<std::string, std::vector<HumanVote>> human;
  if (config.human_rounds) human = load_human_rounds(config.resolve(*config.human_rounds));

  std::vector<RawPost> posts;
  for (const auto& t : timelines) posts.insert(posts.end(), t.post_posts.begin(), t.post_posts.end());
  std::sort(posts.begin(), posts.end(), [](const RawPost& a, const RawPost& b) { return a.post_id < b.post_id; });
  stats.posts = posts.size();

  const auto labels_path = config.out(kLabelsFile);
  std::map<std::string, AnnotationRecord> store;
  if (resume) {
    for (const auto& row : read_jsonl(labels_path)) {
      auto r = annotation_from_json(row);
      store[r.post_id] = std::move(r);
    }
  } else {
    write_jsonl(labels_path, {});
  }
  auto finished = [](const AnnotationRecord& r) {
    return r.final_label.has_value() || (r.llm_relevance && !r.llm_relevance->yes);
  };

  std::vector<const RawPost*> pending;
  for (const auto& p : posts) {
    auto it = store.find(p.post_id);
    if (it != store.end() && finished(it->second)) {
      ++stats.skipped;
    } else {
      pending.push_back(&p);
    }
  }

  std::shared_ptr<ChatProvider> provider;
  auto transcript = std::make_shared<Transcript>();
  if (!pending.empty()) provider = make_provider(config);
  const LlmHandle llm{provider, transcript, config.agent.analysis};
  const auto reprompt = templates.get("reprompt");

  std::mutex store_mutex;
  parallel_for(pending.size(), config.max_in_flight, [&](std::size_t i) {
    const auto& post = *pending[i];
    AnnotationRecord r;
    r.post_id = post.post_id;
    r.text = post.text;
    r.llm_relevance = llm_label(post.post_id, "relevance", post.text, llm, templates.get("annotate_relevance"), reprompt);
    if (auto it = human.find(post.post_id); it != human.end()) r.human_rounds = it->second;
    if (!r.llm_relevance || r.llm_relevance->yes) {
      r.llm_panic = llm_label(post.post_id, "panic", post.text, llm, templates.get("annotate_panic"), reprompt);
      if (r.llm_panic || !r.human_rounds.empty()) r.final_label = merge_labels(r);
    }
    std::lock_guard lock(store_mutex);
    write_jsonl(labels_path, {to_json(r)}, true);
    store[r.post_id] = std::move(r);
  });

  std::vector<json> rows, augmented;
  for (const auto& [id, r] : store) {
    rows.push_back(to_json(r));
    if (r.llm_relevance && !r.llm_relevance->yes) {
      ++stats.irrelevant;
    } else if (!r.final_label) {
      ++stats.unlabeled;
    } else {
      ++stats.labeled;
      const auto variants = eda_augment(r.text, config.eda, thesaurus);
      for (std::size_t v = 0; v < variants.size(); ++v) {
        augmented.push_back({{"post_id", id},
                             {"variant", v + 1},
                             {"text", variants[v]},
                             {"label", std::string(to_string(*r.final_label))}});
      }
    }
  }
  stats.variants = augmented.size();
  write_jsonl(labels_path, rows);
  write_jsonl(config.out(kAugmentedFile), augmented);
  if (!pending.empty()) {
    auto records = read_transcript(config.out(kAnnotateTranscriptFile));
    if (!resume) records.clear();
    for (auto& r : transcript->records()) records.push_back(std::move(r));
    write_transcript(config.out(kAnnotateTranscriptFile), std::move(records));
  }
  log << "annotate: " << stats.posts << " posts, " << stats.labeled << " labeled, " << stats.irrelevant
      << " irrelevant, " << stats.unlabeled << " unlabeled, " << stats.skipped << " resumed, " << stats.variants
      << " augmented variants\n";
  return stats;
}

// trace

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string yes_no(bool b) { return b ? "YES" : "NO"; }

}  // namespace

std::string render_case_report(const StageTrace& t, const std::optional<UserProfile>& profile,
                               const std::vector<PpdtsItem>& items) {
  std::ostringstream out;
  out << "Case report for " << t.user_id << "\n";
  out << "Outcome: " << to_string(t.outcome) << "\n";
  if (!t.reason.empty()) out << "Reason: " << t.reason << "\n";

  if (profile) {
    const auto& p = *profile;
    out << "\n== Profile ==\n";
    out << "Personality:";
    for (auto trait : kTraits) out << " " << to_string(trait) << " " << fixed(p.personality[trait], 3);
    out << "\n";
    out << "Sentiment: positive " << format_percent(p.sentiment.positive) << "%, neutral "
        << format_percent(p.sentiment.neutral) << "%, negative " << format_percent(p.sentiment.negative) << "%\n";
    if (!p.themes.top_themes.empty()) out << "Top themes: " << join(p.themes.top_themes, "; ") << "\n";
    if (p.tone) out << "Tone: " << p.tone->words[0] << ", " << p.tone->words[1] << ", " << p.tone->words[2] << "\n";
    out << "Followers " << p.risk_comm.follower_count << ", followees " << p.risk_comm.followee_count
        << ", posts per day " << fixed(p.risk_comm.posts_per_day, 2) << ", distance to track "
        << (p.risk_comm.distance_to_track_km ? fixed(*p.risk_comm.distance_to_track_km, 1) + " km" : "unavailable")
        << "\n";
    if (!p.flags.empty()) out << "Flags: " << join({p.flags.begin(), p.flags.end()}, ", ") << "\n";
  }

  if (t.ppdts) {
    out << "\n== Risk perception (PPDTS) ==\n";
    out << "Answered " << t.ppdts->answered_count << " items, " << (t.ppdts->valid ? "valid" : "invalid") << "\n";
    std::map<std::string, std::pair<int, int>> subscale;  // total, answered
    for (const auto& item : items) {
      if (auto it = t.ppdts->scores.find(item.id); it != t.ppdts->scores.end()) {
        subscale[item.subscale].first += it->second;
        subscale[item.subscale].second++;
      }
    }
    for (const auto& [name, v] : subscale) {
      out << name << " total " << v.first << " over " << v.second << " items\n";
    }
    for (const auto& [id, score] : t.ppdts->scores) {
      out << "Q" << id << ": " << score;
      if (auto r = t.ppdts->reasons.find(id); r != t.ppdts->reasons.end() && !r->second.empty())
        out << " (" << r->second << ")";
      out << "\n";
    }
  }

  if (t.factors) {
    out << "\n== Panic arousal ==\n";
    for (auto f : kArousalFactors) {
      out << to_string(f) << ": " << (*t.factors)[f].score << "/5";
      if (!(*t.factors)[f].reason.empty()) out << " (" << (*t.factors)[f].reason << ")";
      out << "\n";
    }
  }

  if (t.panic) {
    out << "\n== Panic probability ==\n";
    out << "P = " << fixed(t.panic->probability, 4) << " ("
        << (t.panic->source == ProbabilitySource::LlmReported ? "llm-reported" : "fallback-formula") << "), band "
        << to_string(tone_band(t.panic->probability)) << "\n";
  }

  if (!t.tweets.empty()) {
    out << "\n== Generated posts ==\n";
    for (std::size_t i = 0; i < t.tweets.size(); ++i) {
      const auto& c = t.tweets[i];
      out << "[" << (i + 1) << "] " << c.text << "\n    attempt " << c.attempt << ", "
          << (c.verified ? "verified" : "unverified");
      if (!c.hashtags.empty()) out << ", hashtags " << join(c.hashtags, " ");
      out << "\n";
    }
  }

  if (!t.verdict_history.empty()) {
    out << "\n== Expert verification ==\n";
    for (std::size_t a = 0; a < t.verdict_history.size(); ++a) {
      const auto& v = t.verdict_history[a];
      out << "Attempt " << (a + 1) << ": ";
      if (!v) {
        out << "unparseable verdict\n";
        continue;
      }
      out << (v->passed() ? "PASS" : "FAIL") << "\n";
      for (auto e : kExperts) {
        out << "  " << to_string(e) << ": " << yes_no((*v)[e].pass);
        if (!(*v)[e].reason.empty()) out << " (" << (*v)[e].reason << ")";
        out << "\n";
      }
    }
  }
  return out.str();
}

std::string run_trace(const RunConfig& config, const std::string& user_id, bool as_json) {
  const auto traces = load_traces(config.out(kTracesFile));
  auto it = traces.find(user_id);
  if (it == traces.end()) throw NotFound("no trace for user '" + user_id + "'");
  std::optional<UserProfile> profile;
  if (fs::exists(config.out(kProfilesFile))) {
    auto profiles = load_profiles(config);
    if (auto p = profiles.find(user_id); p != profiles.end()) profile = std::move(p->second);
  }
  if (as_json) {
    json j{{"trace", to_json(it->second)}, {"profile", profile ? to_json(*profile) : json(nullptr)}};
    return j.dump(2) + "\n";
  }
  std::vector<PpdtsItem> items;
  if (fs::exists(config.asset("ppdts.json"))) items = load_ppdts_items(config.asset("ppdts.json"));
  return render_case_report(it->second, profile, items);
}

}  // namespace panicsim
