#include "poisonlens/kernels.hpp"

#include <cmath>

#include "poisonlens/error.hpp"

namespace poisonlens {

KernelSpec KernelSpec::exponential(double length_scale) {
  KernelSpec spec{KernelFamily::Exponential, length_scale};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::linear() { return {KernelFamily::Linear, 1.0}; }

void KernelSpec::validate() const {
  if (family == KernelFamily::Exponential && !(length_scale > 0.0)) {
    raise(ErrorCode::InvalidConfig, "exponential kernel needs a positive length scale");
  }
}

std::string KernelSpec::name() const {
  return family == KernelFamily::Linear ? "linear" : "exponential";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "linear") return KernelFamily::Linear;
  if (name == "exponential" || name == "rbf" || name == "gaussian") return KernelFamily::Exponential;
  raise(ErrorCode::InvalidConfig, "unknown kernel family '" + name + "'");
}

double eval_kernel(const KernelSpec& spec, const Vector& x, const Vector& z) {
  require_same_dim(x.size(), z.size(), "eval_kernel");
  if (spec.family == KernelFamily::Linear) return x.dot(z);
  const double ell2 = spec.length_scale * spec.length_scale;
  return std::exp(-(x - z).squaredNorm() / (2.0 * ell2));
}

Vector kernel_gradient(const KernelSpec& spec, const Vector& x, const Vector& z) {
  require_same_dim(x.size(), z.size(), "kernel_gradient");
  if (spec.family == KernelFamily::Linear) return z;
  const double ell2 = spec.length_scale * spec.length_scale;
  const Vector d = x - z;
  const double k = std::exp(-d.squaredNorm() / (2.0 * ell2));
  return -(k / ell2) * d;
}

Matrix kernel_hessian(const KernelSpec& spec, const Vector& x, const Vector& z) {
  require_same_dim(x.size(), z.size(), "kernel_hessian");
  const Index p = x.size();
  if (spec.family == KernelFamily::Linear) return Matrix::Zero(p, p);
  const double ell2 = spec.length_scale * spec.length_scale;
  const Vector d = x - z;
  const double k = std::exp(-d.squaredNorm() / (2.0 * ell2));
  Matrix H = (k / (ell2 * ell2)) * (d * d.transpose());
  H.diagonal().array() -= k / ell2;
  return H;
}

Matrix cross_gram(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  require_same_dim(A.cols(), B.cols(), "cross_gram");
  if (spec.family == KernelFamily::Linear) return A * B.transpose();
  const double ell2 = spec.length_scale * spec.length_scale;
  Matrix K(A.rows(), B.rows());
  for (Index j = 0; j < B.rows(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) {
      // Direct difference keeps exact duplicates at distance exactly zero.
      const double dist2 = (A.row(i) - B.row(j)).squaredNorm();
      K(i, j) = std::exp(-dist2 / (2.0 * ell2));
    }
  }
  return K;
}

Matrix gram(const KernelSpec& spec, const Matrix& X) {
  if (X.rows() < 1) raise(ErrorCode::EmptyDataset, "gram: no rows");
  Matrix K = cross_gram(spec, X, X);
  // Symmetrise exactly.
  K = 0.5 * (K + K.transpose()).eval();
  return K;
}

Matrix gradient_gram(const KernelSpec& spec, const Matrix& X) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (n < 1) raise(ErrorCode::EmptyDataset, "gradient_gram: no rows");
  Matrix G = Matrix::Zero(n, n);
  if (spec.family == KernelFamily::Linear) {
    // grad_x k(x, x_j) = x_j for every x, so every J_i equals X^T.
    G.noalias() = static_cast<double>(n) * (X * X.transpose());
    return G;
  }
  const double ell2 = spec.length_scale * spec.length_scale;
  Matrix J(p, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Vector d = (X.row(i) - X.row(j)).transpose();
      const double k = std::exp(-d.squaredNorm() / (2.0 * ell2));
      J.col(j) = -(k / ell2) * d;
    }
    G.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
  }
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

}  // namespace poisonlens
