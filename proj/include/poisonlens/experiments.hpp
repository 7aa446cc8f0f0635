#pragma once

#include <string>
#include <vector>

#include "poisonlens/results.hpp"

namespace poisonlens {

enum class ExperimentKind { ClusterSweep, MnistStepwise, FisherFlow, FilterProbe, VerifyAll };

// Accepts dashes or underscores ("cluster-sweep", "cluster_sweep").
ExperimentKind parse_experiment(const std::string& name);
std::string experiment_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::VerifyAll;
  Json parameters = Json::object();  // merged over the experiment defaults
  std::string output_dir;

  // Canonical form hashed into every output row: experiment plus parameters.
  Json canonical() const;
};

Json default_parameters(ExperimentKind kind);

// Reads {"experiment": ..., "parameters": {...}, "output_dir": ...}. Any
// top-level key other than those three is taken as a parameter.
ExperimentConfig config_from_json(const Json& j);

// key=value; the value is parsed as JSON when possible, else kept as a string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Fills defaults for missing parameters and rejects unknown keys, empty
// grids and unseeded runs. Throws InvalidConfig.
void validate_config(ExperimentConfig& cfg);

struct RunOutcome {
  ResultsTable table;
  PersistedPaths paths;
  int exit_code = 0;
  std::string summary;  // one line, ends with PASS or FAIL for verify_all
};

// Builds the table without touching the file system.
ResultsTable compute(const ExperimentConfig& cfg);

// compute + persist into cfg.output_dir.
RunOutcome run(ExperimentConfig cfg);

// POISONLENS_OUTPUT_DIR, else "results".
std::string default_output_dir();

}  // namespace poisonlens
