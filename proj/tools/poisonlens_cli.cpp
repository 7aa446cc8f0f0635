// poisonlens <experiment> [--config file.json] [--set key=value]... [--key=value]...
//
// Any unrecognised --key=value (or --key value) flag is an override for the
// parameter of the same name; dashes in keys map to underscores. Overrides
// are applied after the config file, so flags win.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poisonlens/error.hpp"
#include "poisonlens/experiments.hpp"
#include "poisonlens/io.hpp"

namespace {

std::vector<std::string> extras_to_overrides(const std::vector<std::string>& extras) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() <= 2) {
      throw poisonlens::Error(poisonlens::ErrorCode::InvalidConfig, "unexpected argument '" + a + "'");
    }
    const std::string body = a.substr(2);
    if (body.find('=') != std::string::npos) {
      out.push_back(body);
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      out.push_back(body + "=" + extras[++i]);
    } else {
      out.push_back(body + "=true");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel poisoning laws, spectral detection and gradient-regularisation experiments"};
  app.allow_extras();
  std::string experiment;
  std::string config_path;
  std::vector<std::string> sets;
  std::string output_dir;
  long long seed = -1;
  bool show_version = false;
  app.add_option("experiment", experiment,
                 "cluster-sweep | mnist-stepwise | fisher-flow | filter-probe | verify-all");
  app.add_option("--config,-c", config_path, "JSON config file");
  app.add_option("--set,-s", sets, "parameter override key=value (repeatable)");
  app.add_option("--output-dir,-o", output_dir, "output directory (default $POISONLENS_OUTPUT_DIR or ./results)");
  app.add_option("--seed", seed, "shorthand for --set seed=N");
  app.add_flag("--version", show_version, "print the artifact version");
  CLI11_PARSE(app, argc, argv);

  if (show_version) {
    std::cout << poisonlens::artifact_version() << '\n';
    return 0;
  }
  try {
    poisonlens::ExperimentConfig cfg;
    if (!config_path.empty()) {
      auto j = poisonlens::Json::parse(poisonlens::read_text_file(config_path), nullptr, false);
      if (j.is_discarded()) {
        throw poisonlens::Error(poisonlens::ErrorCode::ParseError, config_path + ": not valid JSON");
      }
      if (!experiment.empty()) j["experiment"] = experiment;
      cfg = poisonlens::config_from_json(j);
    } else if (!experiment.empty()) {
      cfg.experiment = poisonlens::parse_experiment(experiment);
    } else {
      std::cerr << "error: an experiment name or --config is required\n" << app.help();
      return 2;
    }
    for (const auto& s : sets) poisonlens::apply_override(cfg, s);
    for (const auto& s : extras_to_overrides(app.remaining())) poisonlens::apply_override(cfg, s);
    if (seed >= 0) poisonlens::apply_override(cfg, "seed=" + std::to_string(seed));
    if (!output_dir.empty()) cfg.output_dir = output_dir;

    const auto outcome = poisonlens::run(cfg);
    std::cout << outcome.summary << '\n';
    if (outcome.table.experiment() == "verify_all") {
      for (const auto& row : outcome.table.rows()) {
        std::cout << "  " << (row[3] == "1" ? "PASS " : "FAIL ") << row[0] << " = " << std::stod(row[1])
                  << " (tol " << std::stod(row[2]) << ")\n";
      }
      std::cout << (outcome.exit_code == 0 ? "PASS" : "FAIL") << '\n';
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
