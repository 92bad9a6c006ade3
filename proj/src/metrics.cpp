#include "panicsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "panicsim/errors.hpp"
#include "panicsim/jsonl.hpp"

namespace panicsim {

using json = nlohmann::json;

ConfusionMatrix confusion(const std::map<std::string, PanicClass>& predictions,
                          const std::map<std::string, PanicClass>& truths) {
  std::vector<std::string> offenders;
  for (const auto& [id, _] : predictions) {
    if (!truths.count(id)) offenders.push_back(id + " (no ground truth)");
  }
  for (const auto& [id, _] : truths) {
    if (!predictions.count(id)) offenders.push_back(id + " (no prediction)");
  }
  if (!offenders.empty()) {
    std::string list;
    for (const auto& o : offenders) list += (list.empty() ? "" : ", ") + o;
    throw DataError("prediction and ground-truth users differ: " + list);
  }
  ConfusionMatrix m;
  for (const auto& [id, pred] : predictions) {
    const bool p = pred == PanicClass::Panic;
    const bool t = truths.at(id) == PanicClass::Panic;
    if (p && t) ++m.tp;
    else if (p) ++m.fp;
    else if (t) ++m.fn;
    else ++m.tn;
  }
  return m;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

namespace {

double ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

ClassRow make_row(long tp, long fp, long fn) {
  ClassRow r;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = f1_score(r.precision, r.recall);
  r.support = tp + fn;
  return r;
}

}  // namespace

ClassRows class_metrics(const ConfusionMatrix& m) {
  return {make_row(m.tp, m.fp, m.fn), make_row(m.tn, m.fn, m.fp)};
}

MacroSummary macro_average(const ClassRows& rows, const ConfusionMatrix& m) {
  MacroSummary s;
  s.accuracy = ratio(m.tp + m.tn, m.total());
  s.precision = (rows.panic.precision + rows.no_panic.precision) / 2;
  s.recall = (rows.panic.recall + rows.no_panic.recall) / 2;
  s.f1 = (rows.panic.f1 + rows.no_panic.f1) / 2;
  return s;
}

ConfusionMatrix reconstruct_confusion(const ClassRows& rows) {
  ConfusionMatrix m;
  m.tp = std::lround(rows.panic.recall * static_cast<double>(rows.panic.support));
  m.fn = rows.panic.support - m.tp;
  m.tn = std::lround(rows.no_panic.recall * static_cast<double>(rows.no_panic.support));
  m.fp = rows.no_panic.support - m.tn;
  return m;
}

std::optional<double> auc(const std::vector<double>& scores, const std::vector<bool>& panic) {
  if (scores.size() != panic.size()) throw DataError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // average ranks over tie groups
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
    i = j;
  }
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (panic[i]) {
      ++pos;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

EvalReport build_report(const std::map<std::string, PanicClass>& predictions,
                        const std::map<std::string, PanicClass>& truths,
                        const std::map<std::string, double>& ranking_scores,
                        std::map<std::string, long> exclusions) {
  EvalReport r;
  r.matrix = confusion(predictions, truths);
  r.rows = class_metrics(r.matrix);
  r.macro = macro_average(r.rows, r.matrix);
  r.evaluated = r.matrix.total();
  std::vector<double> scores;
  std::vector<bool> panic;
  for (const auto& [id, t] : truths) {
    auto it = ranking_scores.find(id);
    if (it == ranking_scores.end()) throw DataError("no ranking score for " + id);
    scores.push_back(it->second);
    panic.push_back(t == PanicClass::Panic);
  }
  r.auc = auc(scores, panic);
  r.exclusions = std::move(exclusions);
  return r;
}

namespace {

json row_json(const ClassRow& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}, {"support", r.support}};
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

json to_json(const EvalReport& r) {
  json j;
  j["traces"] = r.traces;
  j["evaluated"] = r.evaluated;
  j["unverified_accepted"] = r.unverified_accepted;
  j["confusion"] = {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"fn", r.matrix.fn}, {"tn", r.matrix.tn}};
  j["classes"] = {{"Panic", row_json(r.rows.panic)}, {"No Panic", row_json(r.rows.no_panic)}};
  j["macro"] = {{"accuracy", r.macro.accuracy},
                {"precision", r.macro.precision},
                {"recall", r.macro.recall},
                {"f1", r.macro.f1}};
  j["auc"] = r.auc ? json(*r.auc) : json(nullptr);
  j["exclusions"] = json::object();
  for (const auto& [reason, n] : r.exclusions) j["exclusions"][reason] = n;
  j["config"] = r.config_echo;
  return j;
}

std::string report_csv(const EvalReport& r) {
  std::string out = "class,precision,recall,f1,support,accuracy,auc\n";
  auto row = [&](const std::string& name, const ClassRow& c) {
    out += name + "," + fmt2(c.precision) + "," + fmt2(c.recall) + "," + fmt2(c.f1) + "," + std::to_string(c.support) + ",,\n";
  };
  row("Panic", r.rows.panic);
  row("No Panic", r.rows.no_panic);
  out += "Average," + fmt2(r.macro.precision) + "," + fmt2(r.macro.recall) + "," + fmt2(r.macro.f1) + "," +
         std::to_string(r.evaluated) + "," + fmt2(r.macro.accuracy) + "," + (r.auc ? fmt2(*r.auc) : "") + "\n";
  return out;
}

void emit_report(const EvalReport& report, const std::filesystem::path& json_path, const std::filesystem::path& csv_path) {
  write_json_file(json_path, to_json(report));
  write_text_file(csv_path, report_csv(report));
}

}  // namespace panicsim
