#include "poisonlens/poison_theory.hpp"

#include <cmath>
#include <limits>

#include "poisonlens/error.hpp"

namespace poisonlens {

double poison_gain(std::int64_t m, double c, double k_zeta) {
  if (m < 0) raise(ErrorCode::NegativeCount, "poison_gain: m = " + std::to_string(m));
  if (m == 0) return 0.0;
  const double md = static_cast<double>(m);
  return md / (c + k_zeta * md);
}

double efficacy(double k0, double y_t, double S) { return k0 * y_t * S; }

double spike_factor(const KernelSpec& spec, const Vector& x0, const Vector& zeta) {
  require_same_dim(x0.size(), zeta.size(), "spike_factor");
  const double k0 = eval_kernel(spec, x0, zeta);
  if (std::abs(k0) < 1e-300) raise(ErrorCode::ZeroKernel, "spike_factor: k(x0, zeta) underflows");
  if (spec.family == KernelFamily::Exponential) {
    const double ell2 = spec.length_scale * spec.length_scale;
    return (x0 - zeta).squaredNorm() / (ell2 * ell2);
  }
  return kernel_gradient(spec, x0, zeta).squaredNorm() / (k0 * k0);
}

TheoryReport gn_spike(const KernelSpec& spec, const PoisonCluster& cluster, double c, double lambda_clean) {
  require_same_dim(cluster.x0.size(), cluster.zeta.size(), "gn_spike");
  if (cluster.m < 0) raise(ErrorCode::NegativeCount, "gn_spike: m = " + std::to_string(cluster.m));
  TheoryReport rep;
  if (cluster.m == 0) return rep;
  rep.k0 = eval_kernel(spec, cluster.x0, cluster.zeta);
  rep.k_zeta = eval_kernel(spec, cluster.zeta, cluster.zeta);
  rep.S = poison_gain(cluster.m, c, rep.k_zeta);
  rep.delta_f = efficacy(rep.k0, cluster.y_t, rep.S);
  const double grad2 = kernel_gradient(spec, cluster.x0, cluster.zeta).squaredNorm();
  rep.lambda_gn = cluster.y_t * cluster.y_t * rep.S * rep.S * grad2;
  rep.R_k = spike_factor(spec, cluster.x0, cluster.zeta);
  rep.detect_threshold = detect_threshold(lambda_clean, rep.R_k);
  return rep;
}

NearCloneApprox near_clone(double r, double ell, std::int64_t m, double c, double y_t) {
  if (r < 0.0 || !(ell > 0.0)) raise(ErrorCode::InvalidConfig, "near_clone: need r >= 0 and ell > 0");
  const double S = poison_gain(m, c, 1.0);
  const double ell2 = ell * ell;
  NearCloneApprox out;
  out.delta_f = y_t * S;
  out.lambda = y_t * y_t * S * S * r * r / (ell2 * ell2);
  out.rel_error_scale = r * r / ell2;
  return out;
}

double detect_threshold(double lambda_clean, double R_k) {
  if (lambda_clean < 0.0 || R_k < 0.0) raise(ErrorCode::InvalidConfig, "detect_threshold: negative input");
  if (lambda_clean == 0.0) return 0.0;
  if (R_k == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(lambda_clean / R_k);
}

FeatureMap identity_feature_map() {
  return {[](const Vector& x) { return x; },
          [](const Vector& x) -> Matrix { return Matrix::Identity(x.size(), x.size()); }};
}

FeatureMap linear_feature_map(Matrix A) {
  return {[A](const Vector& x) -> Vector {
            require_same_dim(x.size(), A.cols(), "linear_feature_map");
            return A * x;
          },
          [A](const Vector&) -> Matrix { return A; }};
}

FeatureMap tanh_feature_map(Matrix A, Vector b) {
  require_same_dim(A.rows(), b.size(), "tanh_feature_map");
  return {[A, b](const Vector& x) -> Vector { return (A * x + b).array().tanh().matrix(); },
          [A, b](const Vector& x) -> Matrix {
            const Vector t = (A * x + b).array().tanh().matrix();
            const Vector d = (1.0 - t.array().square()).matrix();
            return d.asDiagonal() * A;
          }};
}

Vector deep_kernel_gradient(const FeatureMap& phi, double ell, const Vector& x0, const Vector& zeta) {
  require_same_dim(x0.size(), zeta.size(), "deep_kernel_gradient");
  if (!(ell > 0.0)) raise(ErrorCode::InvalidConfig, "deep_kernel_gradient: ell must be positive");
  const Vector diff = phi.value(x0) - phi.value(zeta);
  const Matrix J = phi.jacobian(x0);
  require_same_dim(J.rows(), diff.size(), "deep_kernel_gradient: Jacobian rows");
  require_same_dim(J.cols(), x0.size(), "deep_kernel_gradient: Jacobian cols");
  const double ell2 = ell * ell;
  const double kernel_value = std::exp(-diff.squaredNorm() / (2.0 * ell2));
  return -(kernel_value / ell2) * (J.transpose() * diff);
}

}  // namespace poisonlens
