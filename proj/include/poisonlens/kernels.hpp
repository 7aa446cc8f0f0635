#pragma once

#include <string>

#include "poisonlens/dataset.hpp"

namespace poisonlens {

enum class KernelFamily { Linear, Exponential };

// exponential: k(x,z) = exp(-|x - z|^2 / (2 l^2)); linear: k(x,z) = x.z.
// The length scale is ignored by the linear family.
struct KernelSpec {
  KernelFamily family = KernelFamily::Exponential;
  double length_scale = 1.0;

  static KernelSpec exponential(double length_scale);
  static KernelSpec linear();

  void validate() const;
  std::string name() const;
};

KernelFamily parse_kernel_family(const std::string& name);

double eval_kernel(const KernelSpec& spec, const Vector& x, const Vector& z);

// Gradient of k(x, z) with respect to its first argument.
Vector kernel_gradient(const KernelSpec& spec, const Vector& x, const Vector& z);

// Hessian of k(x, z) with respect to its first argument.
Matrix kernel_hessian(const KernelSpec& spec, const Vector& x, const Vector& z);

// K_ij = k(x_i, x_j) for the rows of X.
Matrix gram(const KernelSpec& spec, const Matrix& X);

// K_ij = k(a_i, b_j) between the rows of A and B.
Matrix cross_gram(const KernelSpec& spec, const Matrix& A, const Matrix& B);

// G = sum_i J_i^T J_i where column j of J_i (p x n) is grad_x k(x, x_j) at
// x = x_i. Accumulated one J_i at a time, so memory stays O(np).
Matrix gradient_gram(const KernelSpec& spec, const Matrix& X);

}  // namespace poisonlens
