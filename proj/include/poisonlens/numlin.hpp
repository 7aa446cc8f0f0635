#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "poisonlens/dataset.hpp"

namespace poisonlens {

// Matrix-free symmetric operator. apply must be deterministic and must not
// mutate shared state; the operators built in this library are safe to call
// from several threads at once.
struct LinearOperator {
  Index dim = 0;
  std::function<Vector(const Vector&)> apply;

  Vector operator()(const Vector& v) const { return apply(v); }
};

LinearOperator make_dense_operator(Matrix A);

// Applies the operator to every basis vector. Intended for tests and small dims.
Matrix materialize(const LinearOperator& op);

struct LanczosResult {
  Vector eigenvalues;          // descending
  Matrix eigenvectors;         // dim x k, columns are Ritz vectors
  int iterations_run = 0;
  std::optional<double> breakdown_beta;  // set when beta fell below 1e-8
};

struct QrFactors {
  Matrix Q;  // n x p, orthonormal columns
  Matrix R;  // p x p, upper triangular
};

struct TridiagonalEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns match eigenvalues
};

// Solves (A + jitter I) x = b by Cholesky with one refinement step.
Vector solve_spd(const Matrix& A, const Vector& b, double jitter = 0.0);
Matrix solve_spd(const Matrix& A, const Matrix& B, double jitter = 0.0);

// Thin Householder QR. Throws RankDeficient when |R_ii| < 1e-12 ||A||_F.
QrFactors qr_economy(const Matrix& A);

// Implicit QL with Wilkinson shifts on the symmetric tridiagonal matrix
// with diagonal alpha and off-diagonal beta.
TridiagonalEigen symtrid_eig(const Vector& alpha, const Vector& beta);

inline constexpr int kDefaultLanczosIterations = 10;
inline constexpr double kLanczosBreakdown = 1e-8;

// Lanczos on a symmetric operator starting from a seeded Gaussian vector.
// With reorthogonalize (the default) every new residual is orthogonalised
// against all previous basis vectors twice; without it the plain three-term
// recurrence is used. Iterations are capped at op.dim. Each Ritz vector is
// signed so that its largest-magnitude entry is positive.
LanczosResult lanczos(const LinearOperator& op, int iterations = kDefaultLanczosIterations,
                      std::uint64_t seed = 0, bool reorthogonalize = true);

// Flips v so that its largest-magnitude entry is positive.
void fix_sign(Eigen::Ref<Vector> v);

}  // namespace poisonlens
