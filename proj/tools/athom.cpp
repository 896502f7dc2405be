// athom: run one experiment task from a JSON config.
//
//   athom --config configs/g0_laminate.json --out results/ --workers 4
//   athom --task h_hom_table --override 'surface={"field":{"type":"constant","value":2}}'
//
// Exit codes: 0 success, 1 configuration error, 2 per-row solver failures.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "athom/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Homogenized phase-field fracture experiments"};
  std::string config_path, task, out_dir;
  int workers = 0;
  long long seed = -1;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--task", task, "task name (overrides the config)");
  app.add_option("--out", out_dir, "output directory (default: config output_dir, then $ATHOM_OUT_DIR, then athom_out)");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);
  app.add_option("--override", overrides, "KEY=VALUE, dotted keys, VALUE parsed as JSON when possible")
      ->allow_extra_args(false);
  CLI11_PARSE(app, argc, argv);

  try {
    athom::Json doc = athom::Json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      doc = athom::Json::parse(is, nullptr, false, true);
      if (doc.is_discarded()) throw athom::ConfigError(config_path, "not valid JSON");
    }
    for (const auto& o : overrides) athom::apply_override(doc, o);
    if (!task.empty()) doc["task"] = task;
    if (workers > 0) doc["workers"] = workers;
    if (seed >= 0) doc["seed"] = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) {
      doc["output_dir"] = out_dir;
    } else if (!doc.contains("output_dir")) {
      const char* env = std::getenv("ATHOM_OUT_DIR");
      doc["output_dir"] = env && *env ? env : "athom_out";
    }
    auto cfg = athom::ExperimentConfig::from_json(std::move(doc));
    auto m = athom::run_experiment(cfg);
    std::cout << m.task << ": " << m.rows << " rows, " << m.failed_rows << " failed, " << m.violations
              << " check violations -> " << cfg.output_dir << " (config " << m.config_hash << ")\n";
    return m.failed_rows > 0 ? 2 : 0;
  } catch (const athom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
