#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poisonlens/dataset.hpp"
#include "poisonlens/stepwise.hpp"
#include "poisonlens/triggers.hpp"

namespace poisonlens {

enum class StepBaseLabels {
  Poisoned,  // fit on the poisoned labels with the trigger pixels removed
  Clean,     // fit on the clean labels with the trigger pixels removed
};

struct StepwiseExperimentConfig {
  std::vector<double> thetas{0.01, 0.05, 0.1};
  int target_class = 0;
  int square_side = 4;
  double ridge = 1.0;
  std::uint64_t base_seed = 42;
  StepBaseLabels step_base = StepBaseLabels::Poisoned;
  bool run_step = true;
  int null_draws = 2000;
  std::uint64_t null_seed = 7;
  int num_classes = 10;
};

struct StepwiseRow {
  double theta = 0.0;
  Index n_poisoned = 0;
  double clean_acc = 0.0;       // full model on the clean test set
  double asr = 0.0;             // full model on triggered non-target test images
  double asr_sigma = 0.0;       // binomial standard error of asr
  double step_clean_acc = 0.0;  // stepwise model
  double step_asr = 0.0;
  double step_full_max_diff = 0.0;  // max |beta_step - beta_full| over trigger-pixel-free coefficients
  Vector overlap_sq;            // per class, full model
};

struct WeightGrid {
  std::string name;  // e.g. "full_minus_base"
  int class_id = 0;
  Matrix grid;       // 28 x 28
};

struct StepwiseReport {
  double base_clean_acc = 0.0;  // model trained without poison
  double class_prior = 0.0;
  double null_overlap_q99 = 0.0;
  std::vector<StepwiseRow> rows;
  std::vector<WeightGrid> grids;  // for the largest theta, target class
};

// One full experiment over cfg.thetas. The step model starts from a fit
// without the trigger pixel columns and adds a single column: the mean
// trigger-pixel intensity of each image (exactly 1 on poisoned images).
// Its coefficient is spread evenly over the trigger pixels.
StepwiseReport run_stepwise_experiment(const LabeledDataset& train, const LabeledDataset& test,
                                       const StepwiseExperimentConfig& cfg);

std::string grid_to_csv(const Matrix& grid);

}  // namespace poisonlens
