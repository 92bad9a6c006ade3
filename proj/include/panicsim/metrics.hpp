#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panicsim/labels.hpp"

namespace panicsim {

/// Panic is the positive class.
struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

/// Throws DataError naming every user present in only one of the maps.
ConfusionMatrix confusion(const std::map<std::string, PanicClass>& predictions,
                          const std::map<std::string, PanicClass>& truths);

struct ClassRow {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  long support = 0;
};

/// Harmonic mean; 0 when p + r = 0.
double f1_score(double precision, double recall);

struct ClassRows {
  ClassRow panic;
  ClassRow no_panic;
};

/// Per-class precision, recall and F1 with 0 for empty denominators.
ClassRows class_metrics(const ConfusionMatrix& m);

struct MacroSummary {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

MacroSummary macro_average(const ClassRows& rows, const ConfusionMatrix& m);

/// Counts implied by rounded per-class recalls and supports:
/// tp = round(r_panic * support_panic), tn = round(r_no * support_no).
ConfusionMatrix reconstruct_confusion(const ClassRows& rows);

/// Mann-Whitney AUC with half credit for ties; nullopt unless both classes occur.
std::optional<double> auc(const std::vector<double>& scores, const std::vector<bool>& panic);

struct EvalReport {
  ConfusionMatrix matrix;
  ClassRows rows;
  MacroSummary macro;
  std::optional<double> auc;
  long evaluated = 0;
  long traces = 0;  // users simulated, before exclusions
  long unverified_accepted = 0;
  std::map<std::string, long> exclusions;
  nlohmann::json config_echo = nlohmann::json::object();
};

EvalReport build_report(const std::map<std::string, PanicClass>& predictions,
                        const std::map<std::string, PanicClass>& truths,
                        const std::map<std::string, double>& ranking_scores,
                        std::map<std::string, long> exclusions);

nlohmann::json to_json(const EvalReport& report);

/// class,precision,recall,f1,support,accuracy,auc with Panic, No Panic and
/// Average rows at two decimals.
std::string report_csv(const EvalReport& report);

void emit_report(const EvalReport& report, const std::filesystem::path& json_path, const std::filesystem::path& csv_path);

}  // namespace panicsim
