#pragma once

// Independent reference computations shared by the unit tests. These are
// deliberately naive (finite differences, dense solves, double loops) so
// they share no code path with the library routines they check.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double fd_step(const Vec& x) { return 1e-5 * std::max(1.0, x.norm()); }

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double h = fd_step(x);
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

// Central differences of a vector field; column j is d F / d x_j.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x) {
  const double h = fd_step(x);
  const Vec f0 = F(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec a = x, b = x;
    a[j] += h;
    b[j] -= h;
    J.col(j) = (F(a) - F(b)) / (2.0 * h);
  }
  return J;
}

// Second differences of a scalar function, step 1e-4 to balance truncation
// against cancellation.
inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double h = 1e-4 * std::max(1.0, x.norm());
  const Eigen::Index p = x.size();
  Mat H(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      Vec pp = x, pm = x, mp = x, mm = x;
      pp[i] += h;
      pp[j] += h;
      pm[i] += h;
      pm[j] -= h;
      mp[i] -= h;
      mp[j] += h;
      mm[i] -= h;
      mm[j] -= h;
      H(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  return H;
}

inline double rbf(const Vec& x, const Vec& z, double ell) { return std::exp(-(x - z).squaredNorm() / (2.0 * ell * ell)); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace oracle
