#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "panicsim/app.hpp"
#include "panicsim/config.hpp"
#include "panicsim/errors.hpp"

using namespace panicsim;

int main(int argc, char** argv) {
  CLI::App app{"Panic prediction through simulated social media users"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mock_script;
  std::string out_dir;
  bool resume = false;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--seed", seed, "Override the run seed");
  app.add_option("--mock-script", mock_script, "Replay a scripted provider instead of calling the network");
  app.add_option("--out-dir", out_dir, "Override the output directory");
  app.add_flag("--resume", resume, "Skip users or posts already present in the stores");

  auto* ingest = app.add_subcommand("ingest", "Clean the corpus and build per-user timelines");
  auto* profile = app.add_subcommand("profile", "Build user profiles");
  auto* simulate = app.add_subcommand("simulate", "Run the staged agent for every test user");
  auto* evaluate = app.add_subcommand("evaluate", "Score traces against ground truth");
  auto* annotate = app.add_subcommand("annotate", "Label post-phase posts and augment the labeled set");
  auto* trace = app.add_subcommand("trace", "Print one user's case report");
  std::string user_id;
  std::string format = "text";
  trace->add_option("user_id", user_id, "User to report on")->required();
  trace->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = RunConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (!mock_script.empty()) config.mock_script = std::filesystem::absolute(mock_script);
    if (!out_dir.empty()) config.out_dir = std::filesystem::absolute(out_dir);

    if (ingest->parsed()) {
      run_ingest(config, std::cerr);
    } else if (profile->parsed()) {
      run_profile(config, std::cerr);
    } else if (simulate->parsed()) {
      run_simulate(config, resume, std::cerr);
    } else if (evaluate->parsed()) {
      run_evaluate(config, std::cerr);
    } else if (annotate->parsed()) {
      run_annotate(config, resume, std::cerr);
    } else if (trace->parsed()) {
      std::cout << run_trace(config, user_id, format == "json");
    }
  } catch (const NotFound& e) {
    std::cerr << "not found: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
