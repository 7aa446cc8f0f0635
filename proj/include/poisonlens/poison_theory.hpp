#pragma once

#include <cstdint>
#include <functional>

#include "poisonlens/dataset.hpp"
#include "poisonlens/kernels.hpp"

namespace poisonlens {

// m clones at zeta labelled y_t; x0 is the trigger/test point.
struct PoisonCluster {
  Vector zeta;
  std::int64_t m = 0;
  double y_t = 1.0;
  Vector x0;

  double r() const { return (x0 - zeta).norm(); }
};

struct TheoryReport {
  double S = 0.0;
  double k0 = 0.0;       // k(x0, zeta)
  double k_zeta = 0.0;   // k(zeta, zeta)
  double delta_f = 0.0;
  double lambda_gn = 0.0;
  double R_k = 0.0;
  double detect_threshold = 0.0;
};

// S(m) = m / (c + k_zeta m).
double poison_gain(std::int64_t m, double c, double k_zeta);

// delta_f = k0 y_t S.
double efficacy(double k0, double y_t, double S);

// |grad_x k(x0, zeta)|^2 / k0^2; r^2 / l^4 for the exponential family.
double spike_factor(const KernelSpec& spec, const Vector& x0, const Vector& zeta);

// Closed-form gain, efficacy and Gauss-Newton spike for an isolated cluster.
// lambda_gn = y_t^2 S^2 |grad_x k(x0, zeta)|^2, which equals R_k delta_f^2.
// An empty cluster (m = 0) gives an all-zero report. lambda_clean only
// feeds the detect_threshold field.
TheoryReport gn_spike(const KernelSpec& spec, const PoisonCluster& cluster, double c, double lambda_clean = 0.0);

struct NearCloneApprox {
  double delta_f = 0.0;
  double lambda = 0.0;
  double rel_error_scale = 0.0;  // r^2 / l^2
};

// Leading-order exponential-kernel forms for r << l (k_zeta = 1):
// delta_f ~ y_t S, lambda ~ y_t^2 S^2 r^2 / l^4.
NearCloneApprox near_clone(double r, double ell, std::int64_t m, double c, double y_t);

// Smallest |delta_f| whose spike reaches lambda_clean: sqrt(lambda_clean / R_k).
// Returns +inf when R_k = 0 and lambda_clean > 0, since the spike can never show.
double detect_threshold(double lambda_clean, double R_k);

// Differentiable map phi: R^p -> R^q with its q x p Jacobian.
struct FeatureMap {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

FeatureMap identity_feature_map();
FeatureMap linear_feature_map(Matrix A);
// phi(x) = tanh(A x + b), elementwise.
FeatureMap tanh_feature_map(Matrix A, Vector b);

// Gradient of exp(-|phi(x) - phi(zeta)|^2 / (2 l^2)) at x = x0:
// -(kernel_value / l^2) J_phi(x0)^T (phi(x0) - phi(zeta)).
Vector deep_kernel_gradient(const FeatureMap& phi, double ell, const Vector& x0, const Vector& zeta);

}  // namespace poisonlens
