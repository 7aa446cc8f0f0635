#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "poisonlens/error.hpp"
#include "poisonlens/kernels.hpp"
#include "poisonlens/rng.hpp"

using namespace poisonlens;

TEST_CASE("eval_kernel examples") {
  const auto rbf = KernelSpec::exponential(1.3);
  const Vector x{{0.2, -1.0}};
  CHECK(eval_kernel(rbf, x, x) == 1.0);
  const Vector z = x + Vector{{1.3 * std::sqrt(2.0), 0.0}};
  CHECK(eval_kernel(rbf, x, z) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(eval_kernel(KernelSpec::linear(), Vector{{1.0, 2.0}}, Vector{{3.0, 4.0}}) == 11.0);
  CHECK(eval_kernel(KernelSpec::linear(), x, x) == doctest::Approx(x.squaredNorm()));
}

TEST_CASE("kernel spec validation and parsing") {
  CHECK_THROWS_AS(KernelSpec::exponential(0.0), Error);
  CHECK_THROWS_AS(KernelSpec::exponential(-1.0), Error);
  CHECK(parse_kernel_family("linear") == KernelFamily::Linear);
  CHECK(parse_kernel_family("rbf") == KernelFamily::Exponential);
  CHECK_THROWS_AS(parse_kernel_family("laplace"), Error);
  CHECK_THROWS_AS(eval_kernel(KernelSpec::linear(), Vector::Ones(2), Vector::Ones(3)), Error);
}

TEST_CASE("kernel_gradient examples") {
  const auto rbf = KernelSpec::exponential(1.0);
  CHECK(kernel_gradient(rbf, Vector{{0.5, 0.5}}, Vector{{0.5, 0.5}}).norm() == 0.0);
  const Vector g = kernel_gradient(rbf, Vector{{1.0}}, Vector{{0.0}});
  const Vector fd = oracle::fd_gradient([](const oracle::Vec& x) { return oracle::rbf(x, Vector{{0.0}}, 1.0); },
                                        Vector{{1.0}});
  CHECK(g[0] == doctest::Approx(-std::exp(-0.5)).epsilon(1e-14));
  CHECK(oracle::rel_err(g[0], fd[0]) <= 1e-5);
  const Vector lin = kernel_gradient(KernelSpec::linear(), Vector{{9.0, -1.0}}, Vector{{3.0, 4.0}});
  CHECK(lin == Vector{{3.0, 4.0}});
}

TEST_CASE("kernel_gradient matches central differences on random draws") {
  CounterRng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Index p = 1 + static_cast<Index>(rng.below(4));
    const double ell = rng.uniform(0.3, 3.0);
    const Vector x = rng.normal_vector(p);
    const Vector z = x + ell * rng.uniform(0.1, 1.5) * rng.unit_vector(p);
    const Vector g = kernel_gradient(KernelSpec::exponential(ell), x, z);
    const Vector fd = oracle::fd_gradient([&](const oracle::Vec& v) { return oracle::rbf(v, z, ell); }, x);
    CHECK(oracle::rel_err(g, fd) <= 1e-5);
  }
}

TEST_CASE("kernel_hessian examples and finite differences") {
  CHECK(kernel_hessian(KernelSpec::linear(), Vector{{1.0, 2.0}}, Vector{{3.0, 4.0}}).norm() == 0.0);
  const double ell = 0.7;
  const Vector x{{0.3, -0.2, 1.0}};
  CHECK((kernel_hessian(KernelSpec::exponential(ell), x, x) + Matrix::Identity(3, 3) / (ell * ell)).norm() <= 1e-14);

  CounterRng rng(2);
  for (int i = 0; i < 50; ++i) {
    const double l = rng.uniform(0.5, 2.0);
    const Vector a = rng.normal_vector(3);
    const Vector b = a + l * rng.uniform(0.2, 1.5) * rng.unit_vector(3);
    const auto spec = KernelSpec::exponential(l);
    const Matrix H = kernel_hessian(spec, a, b);
    const Matrix fd = oracle::fd_jacobian([&](const oracle::Vec& v) { return kernel_gradient(spec, v, b); }, a);
    CHECK(oracle::rel_err(H, fd) <= 1e-4);
    CHECK((H - H.transpose()).norm() <= 1e-14);
  }
}

TEST_CASE("gram examples and invariants") {
  Matrix twins(2, 3);
  twins.row(0) << 1.0, 2.0, 3.0;
  twins.row(1) = twins.row(0);
  CHECK((gram(KernelSpec::exponential(1.0), twins) - Matrix::Ones(2, 2)).norm() == 0.0);
  CHECK((gram(KernelSpec::linear(), Matrix::Identity(2, 2)) - Matrix::Identity(2, 2)).norm() == 0.0);

  CounterRng rng(3);
  const Matrix X = rng.normal_matrix(10, 3);
  const Matrix K = gram(KernelSpec::exponential(1.0), X);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  CHECK((K - K.transpose()).norm() == 0.0);

  // Permutation law: gram(P X) = P gram(X) P^T.
  Eigen::PermutationMatrix<Eigen::Dynamic> P(10);
  P.setIdentity();
  for (Index i = 9; i > 0; --i) std::swap(P.indices()[i], P.indices()[static_cast<Index>(rng.below(i + 1))]);
  const Matrix PX = P * X;
  CHECK((gram(KernelSpec::exponential(1.0), PX) - P * K * P.transpose()).norm() <= 1e-14);

  // Direct double loop.
  for (Index i = 0; i < 10; ++i) {
    for (Index j = 0; j < 10; ++j) {
      CHECK(K(i, j) == doctest::Approx(oracle::rbf(X.row(i).transpose(), X.row(j).transpose(), 1.0)).epsilon(1e-14));
    }
  }
  const Matrix B = rng.normal_matrix(4, 3);
  const Matrix C = cross_gram(KernelSpec::exponential(1.0), X, B);
  CHECK(C.rows() == 10);
  CHECK(C.cols() == 4);
  CHECK(C(3, 2) == doctest::Approx(oracle::rbf(X.row(3).transpose(), B.row(2).transpose(), 1.0)));
}

namespace {

// G_jk = sum_i grad k(x_i, x_j) . grad k(x_i, x_k), by explicit triple loop.
Matrix gradient_gram_oracle(const KernelSpec& spec, const Matrix& X) {
  const Index n = X.rows();
  Matrix G = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < n; ++k) {
        const Vector xi = X.row(i).transpose();
        G(j, k) += kernel_gradient(spec, xi, X.row(j).transpose()).dot(kernel_gradient(spec, xi, X.row(k).transpose()));
      }
    }
  }
  return G;
}

}  // namespace

TEST_CASE("gradient_gram examples") {
  CounterRng rng(4);
  const Matrix X = rng.normal_matrix(6, 3);
  const Matrix G = gradient_gram(KernelSpec::linear(), X);
  CHECK((G - 6.0 * X * X.transpose()).norm() <= 1e-12 * G.norm());
  CHECK((G - 6.0 * gram(KernelSpec::linear(), X)).norm() <= 1e-12 * G.norm());

  const Matrix one = gradient_gram(KernelSpec::exponential(1.0), rng.normal_matrix(1, 4));
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == 0.0);

  const Matrix Y = rng.normal_matrix(8, 2);
  const auto spec = KernelSpec::exponential(0.9);
  const Matrix Ge = gradient_gram(spec, Y);
  CHECK(oracle::rel_err(Ge, gradient_gram_oracle(spec, Y)) <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Ge);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}
