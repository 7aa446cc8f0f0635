#pragma once

#include <memory>
#include <vector>

#include "poisonlens/dataset.hpp"

namespace poisonlens {

// Scalar loss L(w; x, y) on a small differentiable model. Subclasses override
// the derivatives they know in closed form; the rest fall back to central
// differences with step 1e-6 max(1, |.|).
class FlowModel {
 public:
  virtual ~FlowModel() = default;

  virtual Index param_dim() const = 0;
  virtual Index input_dim() const = 0;
  virtual double loss(const Vector& w, const Vector& x, double y) const = 0;

  // g_w(x) = grad_x L
  virtual Vector input_gradient(const Vector& w, const Vector& x, double y) const;
  // d g_w(x) / dw, input_dim x param_dim
  virtual Matrix input_gradient_jacobian(const Vector& w, const Vector& x, double y) const;
  // grad_w L
  virtual Vector param_gradient(const Vector& w, const Vector& x, double y) const;
};

// f = w^T x, L = 0.5 (f - y)^2, so g = (w^T x - y) w.
class LinearSquaredModel final : public FlowModel {
 public:
  explicit LinearSquaredModel(Index dim) : dim_(dim) {}
  Index param_dim() const override { return dim_; }
  Index input_dim() const override { return dim_; }
  double loss(const Vector& w, const Vector& x, double y) const override;
  Vector input_gradient(const Vector& w, const Vector& x, double y) const override;
  Matrix input_gradient_jacobian(const Vector& w, const Vector& x, double y) const override;
  Vector param_gradient(const Vector& w, const Vector& x, double y) const override;

 private:
  Index dim_;
};

// L = x^T M w, so g = M w for every sample and A = M M^T. Under the
// penalty-only flow w(t) = exp(-kappa M^T M t) w0.
class LinearMapModel final : public FlowModel {
 public:
  explicit LinearMapModel(Matrix M) : M_(std::move(M)) {}
  Index param_dim() const override { return M_.cols(); }
  Index input_dim() const override { return M_.rows(); }
  double loss(const Vector& w, const Vector& x, double y) const override;
  Vector input_gradient(const Vector& w, const Vector& x, double y) const override;
  Matrix input_gradient_jacobian(const Vector& w, const Vector& x, double y) const override;
  Vector param_gradient(const Vector& w, const Vector& x, double y) const override;
  const Matrix& matrix() const { return M_; }

 private:
  Matrix M_;
};

// L = 0.5 sum_j w_j x_j^2, so g = w .* x and A = diag(x^2). Coordinates
// where the data has large magnitude (a poison cluster) contract fastest.
class QuadraticFeatureModel final : public FlowModel {
 public:
  explicit QuadraticFeatureModel(Index dim) : dim_(dim) {}
  Index param_dim() const override { return dim_; }
  Index input_dim() const override { return dim_; }
  double loss(const Vector& w, const Vector& x, double y) const override;
  Vector input_gradient(const Vector& w, const Vector& x, double y) const override;
  Matrix input_gradient_jacobian(const Vector& w, const Vector& x, double y) const override;
  Vector param_gradient(const Vector& w, const Vector& x, double y) const override;

 private:
  Index dim_;
};

// w = [a; b], f = (a^T x)(b^T x), L = 0.5 (f - y)^2. Only the loss is
// closed form; derivatives use the finite-difference defaults.
class BilinearModel final : public FlowModel {
 public:
  explicit BilinearModel(Index dim) : dim_(dim) {}
  Index param_dim() const override { return 2 * dim_; }
  Index input_dim() const override { return dim_; }
  double loss(const Vector& w, const Vector& x, double y) const override;

 private:
  Index dim_;
};

Vector input_gradient(const FlowModel& model, const Vector& w, const Vector& x, double y);

// F(w) = mean over rows of g g^T.
Matrix fisher_matrix(const FlowModel& model, const Vector& w, const LabeledDataset& data);

struct FlowOptions {
  double kappa = 1.0;
  bool include_loss_term = false;
  double dt = 1e-3;
  double T = 5.0;
};

struct FisherTrace {
  double dt = 0.0;
  double kappa = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> energies;  // [probe][step], E_v = v^T F v
  std::vector<std::vector<double>> bound;     // [probe][step], E_v(0) exp(-2 kappa alpha_v t)
  std::vector<double> alpha_per_probe;        // min of v^T A v over data and trajectory
  double alpha_estimate = 0.0;                // min over probes
  std::vector<double> fisher_min_eigenvalue;  // per step
  Vector w_final;
};

// Explicit Euler on dw/dt = -grad_w J, J = E[L] + (kappa / 2) E|g|^2, with
// the loss term dropped unless include_loss_term. Throws StepDiverged when
// |w| exceeds 1e6.
FisherTrace integrate_flow(const FlowModel& model, const Vector& w0, const LabeledDataset& data,
                           const FlowOptions& options, const std::vector<Vector>& probes);

struct ContractionReport {
  std::vector<bool> monotone;
  std::vector<bool> bounded;
  std::vector<double> slack;  // 2 dt max |dE_i - dE_{i-1}| / dt per probe
  bool all_pass() const;
};

ContractionReport contraction_check(const FisherTrace& trace);

// Mean log decay rate -(1 / t) log(E_v(t) / E_v(0)) at the final time.
std::vector<double> decay_rates(const FisherTrace& trace);

}  // namespace poisonlens
