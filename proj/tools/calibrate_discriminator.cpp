// Refits the rule discriminator's threshold on a labeled CSV (text,label).

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panicsim/corpus.hpp"
#include "panicsim/discriminator.hpp"
#include "panicsim/jsonl.hpp"
#include "panicsim/metrics.hpp"
#include "panicsim/text.hpp"

using namespace panicsim;

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the rule discriminator threshold"};
  std::string lexicon_path, weights_path, set_path, out_path;
  app.add_option("--lexicon", lexicon_path, "Panic lexicon TSV")->required()->check(CLI::ExistingFile);
  app.add_option("--weights", weights_path, "Current rule weights JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--set", set_path, "Labeled CSV with header text,label")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Where to write the calibrated weights (default: stdout)");
  CLI11_PARSE(app, argc, argv);

  try {
    auto weights = RuleWeights::load(weights_path);
    RuleClassifier rule(WeightLexicon::load(lexicon_path), weights);

    std::ifstream in(set_path);
    std::string line;
    std::vector<double> scores;
    std::vector<bool> panic;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      const auto f = split_csv_line(line);
      if (header) {
        header = false;
        continue;
      }
      if (f.size() < 2) throw DataError("calibration rows need text,label");
      auto cls = parse_panic_class(f[1]);
      if (!cls) throw DataError("bad label '" + f[1] + "'");
      scores.push_back(rule.score(f[0]));
      panic.push_back(*cls == PanicClass::Panic);
    }

    weights.threshold = calibrate_threshold(scores, panic);
    ConfusionMatrix m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool pred = scores[i] >= weights.threshold;
      if (pred && panic[i]) ++m.tp;
      else if (pred) ++m.fp;
      else if (panic[i]) ++m.fn;
      else ++m.tn;
    }
    const auto rows = class_metrics(m);
    const auto macro = macro_average(rows, m);
    std::cerr << "threshold " << weights.threshold << " on " << scores.size() << " texts: accuracy " << macro.accuracy
              << ", macro F1 " << macro.f1 << "\n";

    if (out_path.empty()) {
      std::cout << weights.to_json().dump(2) << "\n";
    } else {
      write_json_file(out_path, weights.to_json());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
