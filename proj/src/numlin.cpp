#include "poisonlens/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "poisonlens/error.hpp"
#include "poisonlens/rng.hpp"

namespace poisonlens {

LinearOperator make_dense_operator(Matrix A) {
  if (A.rows() != A.cols()) raise(ErrorCode::DimensionMismatch, "make_dense_operator: matrix not square");
  const Index n = A.rows();
  return {n, [A = std::move(A)](const Vector& v) -> Vector { return A * v; }};
}

Matrix materialize(const LinearOperator& op) {
  Matrix M(op.dim, op.dim);
  Vector e = Vector::Zero(op.dim);
  for (Index j = 0; j < op.dim; ++j) {
    e[j] = 1.0;
    M.col(j) = op(e);
    e[j] = 0.0;
  }
  return M;
}

namespace {

Eigen::LLT<Matrix> factor_spd(const Matrix& A, double jitter) {
  if (A.rows() != A.cols()) raise(ErrorCode::DimensionMismatch, "solve_spd: matrix not square");
  if (jitter < 0.0) raise(ErrorCode::NotPositiveDefinite, "solve_spd: negative jitter");
  Matrix shifted = A;
  if (jitter > 0.0) shifted.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    raise(ErrorCode::NotPositiveDefinite, "Cholesky factorisation failed (jitter " + std::to_string(jitter) + ")");
  }
  return llt;
}

}  // namespace

Vector solve_spd(const Matrix& A, const Vector& b, double jitter) {
  require_same_dim(A.rows(), b.size(), "solve_spd");
  const auto llt = factor_spd(A, jitter);
  Vector x = llt.solve(b);
  // One step of iterative refinement against the shifted system.
  Vector residual = b - A * x - jitter * x;
  x += llt.solve(residual);
  if (!x.allFinite()) raise(ErrorCode::NotPositiveDefinite, "solve_spd: non-finite solution");
  return x;
}

Matrix solve_spd(const Matrix& A, const Matrix& B, double jitter) {
  require_same_dim(A.rows(), B.rows(), "solve_spd");
  const auto llt = factor_spd(A, jitter);
  Matrix X = llt.solve(B);
  Matrix residual = B - A * X - jitter * X;
  X += llt.solve(residual);
  if (!X.allFinite()) raise(ErrorCode::NotPositiveDefinite, "solve_spd: non-finite solution");
  return X;
}

QrFactors qr_economy(const Matrix& A) {
  const Index n = A.rows();
  const Index p = A.cols();
  if (n < p) raise(ErrorCode::RankDeficient, "qr_economy: fewer rows than columns");
  Eigen::HouseholderQR<Matrix> qr(A);
  QrFactors out;
  out.R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  out.Q = qr.householderQ() * Matrix::Identity(n, p);
  const double floor = 1e-12 * A.norm();
  for (Index i = 0; i < p; ++i) {
    if (std::abs(out.R(i, i)) < floor || out.R(i, i) == 0.0) {
      raise(ErrorCode::RankDeficient, "qr_economy: |R(" + std::to_string(i) + "," + std::to_string(i) +
                                          ")| below 1e-12 ||A||");
    }
  }
  return out;
}

TridiagonalEigen symtrid_eig(const Vector& alpha, const Vector& beta) {
  const Index n = alpha.size();
  if (n == 0 || beta.size() != n - 1) {
    raise(ErrorCode::DimensionMismatch, "symtrid_eig: need len(beta) == len(alpha) - 1 >= 0");
  }
  Vector d = alpha;
  Vector e = Vector::Zero(n);
  for (Index i = 0; i + 1 < n; ++i) e[i] = beta[i];
  Matrix z = Matrix::Identity(n, n);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (Index l = 0; l < n; ++l) {
    int sweeps = 0;
    Index m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++sweeps > 64) raise(ErrorCode::FitFailed, "symtrid_eig: QL iteration did not converge");

      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (Index i = m - 1; i >= l; --i) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (Index k = 0; k < n; ++k) {
          const double t = z(k, i + 1);
          z(k, i + 1) = s * z(k, i) + c * t;
          z(k, i) = c * z(k, i) - s * t;
        }
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d[a] > d[b]; });
  TridiagonalEigen out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    out.eigenvalues[j] = d[order[static_cast<std::size_t>(j)]];
    out.eigenvectors.col(j) = z.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

void fix_sign(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

LanczosResult lanczos(const LinearOperator& op, int iterations, std::uint64_t seed, bool reorthogonalize) {
  if (iterations < 1) raise(ErrorCode::InvalidConfig, "lanczos: iterations must be >= 1");
  if (op.dim < 1) raise(ErrorCode::DimensionMismatch, "lanczos: empty operator");
  const Index n = op.dim;
  const Index max_steps = std::min<Index>(iterations, n);

  CounterRng rng(seed);
  Vector q = rng.unit_vector(n);
  Matrix basis(n, max_steps);
  std::vector<double> alphas;
  std::vector<double> betas;
  LanczosResult result;

  for (Index k = 0; k < max_steps; ++k) {
    basis.col(k) = q;
    Vector r = op(q);
    require_same_dim(r.size(), n, "lanczos: operator output");
    const double a = q.dot(r);
    r -= a * q;
    if (k > 0) r -= betas.back() * basis.col(k - 1);
    if (reorthogonalize) {
      for (int pass = 0; pass < 2; ++pass) {
        const auto previous = basis.leftCols(k + 1);
        r -= previous * (previous.transpose() * r);
      }
    }
    alphas.push_back(a);
    result.iterations_run = static_cast<int>(k + 1);
    const double b = r.norm();
    if (b < kLanczosBreakdown) {
      result.breakdown_beta = b;
      break;
    }
    if (k + 1 == max_steps) break;
    betas.push_back(b);
    q = r / b;
  }

  const Index steps = static_cast<Index>(alphas.size());
  const auto tri = symtrid_eig(Eigen::Map<const Vector>(alphas.data(), steps),
                               Eigen::Map<const Vector>(betas.data(), steps - 1));
  result.eigenvalues = tri.eigenvalues;
  result.eigenvectors = basis.leftCols(steps) * tri.eigenvectors;
  for (Index j = 0; j < steps; ++j) fix_sign(result.eigenvectors.col(j));
  return result;
}

}  // namespace poisonlens
