#pragma once

#include <memory>
#include <vector>

#include "poisonlens/dataset.hpp"
#include "poisonlens/numlin.hpp"
#include "poisonlens/triggers.hpp"

namespace poisonlens {

// Least-squares fit of Y (n x K) on X (n x p). With ridge r > 0 the design
// is augmented as [X; sqrt(r) I] with zero targets, so every quantity below
// (residual, RSS, the update) refers to the penalised problem.
struct LinearFit {
  std::shared_ptr<const Matrix> design;  // (n + p) x p when ridge > 0, else n x p
  Index n_data = 0;
  Matrix Y;         // targets on the design rows (zeros on ridge rows)
  Matrix beta;      // p x K
  Matrix residual;  // design rows x K
  QrFactors qr;
  double ridge = 0.0;
  bool intercept = false;  // last column is the constant 1
  bool jittered = false;   // ridge was raised from 0 by the rank fallback

  Index p() const { return beta.rows(); }
  Index outputs() const { return beta.cols(); }
  Vector rss() const { return residual.colwise().squaredNorm().transpose(); }
};

LinearFit base_fit(const Matrix& X, const Matrix& Y, double ridge = 0.0);
LinearFit base_fit(const Matrix& X, const Vector& y, double ridge = 0.0);

struct StepwiseUpdate {
  Vector beta_new;           // one per output
  Matrix beta_old_adjusted;  // p x K
  Vector delta_rss;          // one per output
  double denominator = 0.0;  // x_new^T M_X x_new (+ ridge)
};

// Appends one column. With ridge the new coefficient gets its own penalty
// row, which adds r to the denominator.
StepwiseUpdate add_feature(const LinearFit& fit, const Vector& x_new);

// Direct least squares on [X x_new] through a column-pivoted QR. Returns
// (p + 1) x K coefficients with the new column last.
Matrix full_refit_oracle(const Matrix& X, const Vector& x_new, const Matrix& Y, double ridge = 0.0);

Matrix one_hot(const Vector& labels, int num_classes);

// Appends a constant column.
Matrix with_intercept(const Matrix& X);

// One-hot multi-output regression sharing one QR. With ridge = 0 and a
// rank-deficient design, jitter_fallback refits with ridge 1e-8 |X|_F^2 / p.
LinearFit onehot_fit(const LabeledDataset& train, double ridge = 0.0, bool intercept = true,
                     bool jitter_fallback = true, int num_classes = 0);

// Raw outputs for feature rows (without the intercept column).
Matrix scores(const LinearFit& fit, const Matrix& X);

// argmax with ties to the lowest index.
int argmax_class(const Eigen::Ref<const Vector>& row);
std::vector<int> classify(const LinearFit& fit, const Matrix& X);
double accuracy(const LinearFit& fit, const LabeledDataset& data);

// Fraction of non-target test samples classified as target_class after the
// trigger is stamped on.
double attack_success_rate(const LinearFit& fit, const LabeledDataset& test, const TriggerMask& mask,
                           int target_class);

// Share of target_class among all labels: the chance level for an ASR.
double class_prior(const LabeledDataset& data, int target_class);

// Squared cosine between one coefficient vector (shifted to zero mean) and
// the normalised mask. Throws ZeroCoefficient on a vanishing vector.
double overlap_sq(const Vector& beta_pixels, const TriggerMask& mask);

// Per-class overlap of the pixel coefficients of a linear fit. For squared
// loss the input Hessian of class c is beta_c beta_c^T, whose top
// eigenvector is beta_c / |beta_c|.
Vector input_hessian_overlap(const LinearFit& fit, const TriggerMask& mask);

// Quantile of overlap_sq for Gaussian random directions.
double random_direction_null(const TriggerMask& mask, int draws, std::uint64_t seed, double quantile);

}  // namespace poisonlens
