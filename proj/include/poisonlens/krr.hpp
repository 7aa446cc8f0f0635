#pragma once

#include "poisonlens/dataset.hpp"
#include "poisonlens/kernels.hpp"
#include "poisonlens/numlin.hpp"

namespace poisonlens {

// The ridge is the raw diagonal constant c added to K. A per-sample
// regulariser lambda maps to c = n * lambda; both forms of the normal
// equations are served by the same parameter.
inline double ridge_from_lambda(double lambda, Index n) { return static_cast<double>(n) * lambda; }

struct KrrModel {
  KernelSpec spec;
  Matrix train_X;
  Vector alpha;
  double ridge_c = 0.0;
  double kappa = 0.0;
  bool jittered = false;  // the solve needed the diagonal jitter fallback

  Index size() const { return train_X.rows(); }
  Index dim() const { return train_X.cols(); }
};

// Plain KRR: (K + c I) alpha = y.
KrrModel fit(const KernelSpec& spec, const Matrix& X, const Vector& y, double ridge_c);

// Gradient-regularised KRR: (K + c I + kappa G) alpha = y.
KrrModel fit_gradreg(const KernelSpec& spec, const Matrix& X, const Vector& y, double ridge_c, double kappa);

double predict(const KrrModel& model, const Vector& x);
Vector predict(const KrrModel& model, const Matrix& X);

// grad_x f(x) = sum_i alpha_i grad_x k(x, x_i).
Vector score_gradient(const KrrModel& model, const Vector& x);

// sum_i alpha_i hess_x k(x, x_i).
Matrix score_hessian(const KrrModel& model, const Vector& x);

// Input Hessian of 0.5 (f(x) - y)^2: grad f grad f^T + (f - y) hess f.
Matrix input_hessian_loss(const KrrModel& model, const Vector& x, double y);

enum class HvpMode {
  Analytic,          // full Hessian, matrix-free
  FiniteDifference,  // central difference of the loss input-gradient, step 1e-5
  GaussNewton,       // grad f grad f^T term only
};

inline constexpr double kHvpFiniteDifferenceStep = 1e-5;

// v -> (1/N) sum_j H(x_j, y_j) v over the dataset rows.
LinearOperator hvp_operator(const KrrModel& model, const LabeledDataset& data, HvpMode mode = HvpMode::Analytic);

// tr[K (K + c I + kappa G)^-1]
double degrees_of_freedom(const KernelSpec& spec, const Matrix& X, double ridge_c, double kappa);

// |y - K alpha|^2 on the training inputs.
double training_residual(const KrrModel& model, const Vector& y);

// Compares the gradient-regularised linear-kernel fit against a plain fit
// with ridge c + n kappa. The two agree in primal weights X^T alpha when
// X^T X = I; otherwise the deviation is reported.
struct LinearRidgeEquivalence {
  double weight_deviation = 0.0;   // max |w_gradreg - w_ridge|
  double alpha_deviation = 0.0;    // max |alpha_gradreg - alpha_ridge|
  double isotropy_defect = 0.0;    // max |X^T X - I|
};
LinearRidgeEquivalence linear_ridge_equivalence(const Matrix& X, const Vector& y, double ridge_c, double kappa);

}  // namespace poisonlens
