#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poisonlens/dataset.hpp"
#include "poisonlens/kernels.hpp"
#include "poisonlens/krr.hpp"
#include "poisonlens/poison_theory.hpp"

namespace poisonlens {

enum class LambdaCleanEstimator { Mean, Max };

// One synthetic cell: a Gaussian clean blob with labels sin(x_1) plus m
// poison points at zeta, which sits separation * l away from the clean mean.
// The trigger point x0 lies r_over_ell * l from zeta. When theta is set it
// overrides m via m = round(theta n_clean / (1 - theta)), i.e. theta is the
// poison share of the full training set.
struct ClusterConfig {
  Index n_clean = 90;
  Index p = 2;
  std::int64_t m = 10;
  std::optional<double> theta;
  double separation = 20.0;
  double r_over_ell = 0.1;
  double ridge_c = 1.0;
  double kappa = 0.0;
  double y_t = 1.0;
  // Standard deviation (in units of l) of the poison points around zeta.
  // Zero gives exact clones.
  double cluster_spread = 0.0;
  std::uint64_t seed = 0;
  KernelSpec kernel = KernelSpec::exponential(1.0);
  LambdaCleanEstimator estimator = LambdaCleanEstimator::Mean;
  int lanczos_iterations = 10;

  std::int64_t resolved_m() const;
  void validate() const;
};

struct ClusterInstance {
  LabeledDataset data;  // clean rows first, then the poison rows
  PoisonCluster cluster;
  Index n_clean = 0;

  LabeledDataset clean() const;
};

ClusterInstance build_cluster_dataset(const ClusterConfig& cfg);

struct GainCheck {
  double numeric_sum_alpha = 0.0;
  double theory = 0.0;
  double abs_err = 0.0;
};

// Sum of the poison-block dual coefficients of a plain fit vs y_t S(m).
GainCheck verify_gain(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c);

struct EfficacyCheck {
  double numeric = 0.0;  // f_full(x0) - f_clean(x0)
  double theory = 0.0;
  double rel_err = 0.0;
};

EfficacyCheck verify_efficacy(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c);

struct SpikeCheck {
  double lambda_numeric = 0.0;  // top eigenvalue of grad f grad f^T at x0
  double lambda_theory = 0.0;
  double rel_err = 0.0;
};

SpikeCheck verify_spike_law(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c);

// Background curvature: the top eigenvalue of input_hessian_loss at each
// clean point, reduced by mean (default) or max.
double estimate_lambda_clean(const KrrModel& model, const LabeledDataset& clean_points,
                             LambdaCleanEstimator estimator = LambdaCleanEstimator::Mean);

struct SweepRow {
  std::size_t index = 0;
  double theta = 0.0;
  double kappa = 0.0;
  std::int64_t m = 0;
  double r_over_ell = 0.0;
  double delta_f_numeric = 0.0;
  double delta_f_theory = 0.0;
  double lambda_top_numeric = 0.0;
  double lambda_theory = 0.0;
  double lambda_clean = 0.0;
  double overlap_sq = 0.0;
  bool detect_flag = false;
  double df = 0.0;
  double residual = 0.0;
  std::string error;  // empty unless the cell failed
};

// Evaluates one cell. The spectral quantities are measured on the probe set
// {(x0, y_t)}: lambda_top_numeric is the top Lanczos eigenvalue of the
// Gauss-Newton operator there, and overlap_sq is the squared cosine between
// the top Lanczos eigenvector of the full input Hessian and (x0 - zeta) / r.
SweepRow run_cell(const ClusterConfig& cfg, std::size_t index = 0);

// Failed cells are recorded with their error text and the sweep carries on.
std::vector<SweepRow> run_sweep(const std::vector<ClusterConfig>& grid);

}  // namespace poisonlens
