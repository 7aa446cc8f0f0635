#include "poisonlens/krr.hpp"

#include "poisonlens/error.hpp"

namespace poisonlens {

namespace {

Matrix system_matrix(const KernelSpec& spec, const Matrix& X, const Matrix& K, double ridge_c, double kappa) {
  Matrix A = K;
  A.diagonal().array() += ridge_c;
  if (kappa > 0.0) A += kappa * gradient_gram(spec, X);
  return A;
}

// Cholesky solve; on failure retry once with jitter 1e-10 tr(K)/n.
template <typename Rhs>
Rhs solve_with_fallback(const Matrix& A, const Matrix& K, const Rhs& b, bool* jittered) {
  try {
    return solve_spd(A, b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
  }
  const double jitter = 1e-10 * K.trace() / static_cast<double>(K.rows());
  try {
    if (jittered) *jittered = true;
    return solve_spd(A, b, jitter);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    raise(ErrorCode::SingularSystem, "KRR system is singular even with jitter");
  }
}

void check_params(double ridge_c, double kappa) {
  if (ridge_c < 0.0) raise(ErrorCode::InvalidConfig, "ridge_c must be nonnegative");
  if (kappa < 0.0) raise(ErrorCode::InvalidConfig, "kappa must be nonnegative");
}

}  // namespace

KrrModel fit(const KernelSpec& spec, const Matrix& X, const Vector& y, double ridge_c) {
  return fit_gradreg(spec, X, y, ridge_c, 0.0);
}

KrrModel fit_gradreg(const KernelSpec& spec, const Matrix& X, const Vector& y, double ridge_c, double kappa) {
  spec.validate();
  check_params(ridge_c, kappa);
  require_same_dim(X.rows(), y.size(), "fit_gradreg");
  if (X.rows() == 0) raise(ErrorCode::EmptyDataset, "fit_gradreg: no training points");
  const Matrix K = gram(spec, X);
  const Matrix A = system_matrix(spec, X, K, ridge_c, kappa);
  KrrModel model{spec, X, Vector(), ridge_c, kappa, false};
  model.alpha = solve_with_fallback(A, K, y, &model.jittered);
  return model;
}

double predict(const KrrModel& model, const Vector& x) {
  require_same_dim(x.size(), model.dim(), "predict");
  double f = 0.0;
  for (Index i = 0; i < model.size(); ++i) {
    if (model.alpha[i] == 0.0) continue;
    f += model.alpha[i] * eval_kernel(model.spec, x, model.train_X.row(i).transpose());
  }
  return f;
}

Vector predict(const KrrModel& model, const Matrix& X) {
  require_same_dim(X.cols(), model.dim(), "predict");
  return cross_gram(model.spec, X, model.train_X) * model.alpha;
}

Vector score_gradient(const KrrModel& model, const Vector& x) {
  require_same_dim(x.size(), model.dim(), "score_gradient");
  Vector g = Vector::Zero(model.dim());
  for (Index i = 0; i < model.size(); ++i) {
    if (model.alpha[i] == 0.0) continue;
    g += model.alpha[i] * kernel_gradient(model.spec, x, model.train_X.row(i).transpose());
  }
  return g;
}

Matrix score_hessian(const KrrModel& model, const Vector& x) {
  require_same_dim(x.size(), model.dim(), "score_hessian");
  Matrix H = Matrix::Zero(model.dim(), model.dim());
  if (model.spec.family == KernelFamily::Linear) return H;
  for (Index i = 0; i < model.size(); ++i) {
    if (model.alpha[i] == 0.0) continue;
    H += model.alpha[i] * kernel_hessian(model.spec, x, model.train_X.row(i).transpose());
  }
  return H;
}

Matrix input_hessian_loss(const KrrModel& model, const Vector& x, double y) {
  const Vector g = score_gradient(model, x);
  Matrix H = g * g.transpose();
  const double resid = predict(model, x) - y;
  if (resid != 0.0 && model.spec.family != KernelFamily::Linear) H += resid * score_hessian(model, x);
  return H;
}

namespace {

// Per-point data for the matrix-free product: H v = g (g.v) + resid * sum_i a_i k_i ((d_i.v) d_i / l^4 - v / l^2).
struct HvpPoint {
  Vector grad;
  double resid = 0.0;
  Matrix diffs;   // p x n, column i is x - x_i
  Vector weights; // alpha_i k(x, x_i)
};

HvpPoint prepare_point(const KrrModel& model, const Vector& x, double y) {
  HvpPoint pt;
  pt.grad = score_gradient(model, x);
  pt.resid = predict(model, x) - y;
  if (model.spec.family == KernelFamily::Exponential) {
    const Index n = model.size();
    pt.diffs.resize(model.dim(), n);
    pt.weights.resize(n);
    for (Index i = 0; i < n; ++i) {
      const Vector xi = model.train_X.row(i).transpose();
      pt.diffs.col(i) = x - xi;
      pt.weights[i] = model.alpha[i] * eval_kernel(model.spec, x, xi);
    }
  }
  return pt;
}

Vector loss_input_gradient(const KrrModel& model, const Vector& x, double y) {
  return (predict(model, x) - y) * score_gradient(model, x);
}

}  // namespace

LinearOperator hvp_operator(const KrrModel& model, const LabeledDataset& data, HvpMode mode) {
  if (data.empty()) raise(ErrorCode::EmptyDataset, "hvp_operator: empty dataset");
  require_same_dim(data.dim(), model.dim(), "hvp_operator");
  const Index p = model.dim();
  const double inv_n = 1.0 / static_cast<double>(data.size());

  if (mode == HvpMode::FiniteDifference) {
    return {p, [model, data, inv_n](const Vector& v) -> Vector {
              Vector out = Vector::Zero(v.size());
              const double h = kHvpFiniteDifferenceStep;
              for (Index j = 0; j < data.size(); ++j) {
                const Vector x = data.X.row(j).transpose();
                out += (loss_input_gradient(model, x + h * v, data.y[j]) -
                        loss_input_gradient(model, x - h * v, data.y[j])) /
                       (2.0 * h);
              }
              return out * inv_n;
            }};
  }

  std::vector<HvpPoint> points;
  points.reserve(static_cast<std::size_t>(data.size()));
  for (Index j = 0; j < data.size(); ++j) points.push_back(prepare_point(model, data.X.row(j).transpose(), data.y[j]));
  const bool full = mode == HvpMode::Analytic && model.spec.family == KernelFamily::Exponential;
  const double ell2 = model.spec.length_scale * model.spec.length_scale;

  return {p, [points = std::move(points), full, ell2, inv_n](const Vector& v) -> Vector {
            Vector out = Vector::Zero(v.size());
            for (const auto& pt : points) {
              out += pt.grad * pt.grad.dot(v);
              if (full && pt.resid != 0.0) {
                const Vector proj = pt.diffs.transpose() * v;  // d_i . v
                const Vector coef = pt.weights.cwiseProduct(proj) / (ell2 * ell2);
                out += pt.resid * (pt.diffs * coef - (pt.weights.sum() / ell2) * v);
              }
            }
            return out * inv_n;
          }};
}

double degrees_of_freedom(const KernelSpec& spec, const Matrix& X, double ridge_c, double kappa) {
  spec.validate();
  check_params(ridge_c, kappa);
  if (X.rows() == 0) raise(ErrorCode::EmptyDataset, "degrees_of_freedom: no points");
  const Matrix K = gram(spec, X);
  const Matrix A = system_matrix(spec, X, K, ridge_c, kappa);
  // tr[K A^-1] = tr[A^-1 K]
  const Matrix AinvK = solve_with_fallback(A, K, K, nullptr);
  return AinvK.trace();
}

double training_residual(const KrrModel& model, const Vector& y) {
  require_same_dim(y.size(), model.size(), "training_residual");
  const Matrix K = gram(model.spec, model.train_X);
  return (y - K * model.alpha).squaredNorm();
}

LinearRidgeEquivalence linear_ridge_equivalence(const Matrix& X, const Vector& y, double ridge_c, double kappa) {
  const auto spec = KernelSpec::linear();
  const auto gr = fit_gradreg(spec, X, y, ridge_c, kappa);
  const auto rr = fit(spec, X, y, ridge_c + static_cast<double>(X.rows()) * kappa);
  LinearRidgeEquivalence out;
  out.weight_deviation = (X.transpose() * (gr.alpha - rr.alpha)).cwiseAbs().maxCoeff();
  out.alpha_deviation = (gr.alpha - rr.alpha).cwiseAbs().maxCoeff();
  out.isotropy_defect = (X.transpose() * X - Matrix::Identity(X.cols(), X.cols())).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace poisonlens
