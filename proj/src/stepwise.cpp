#include "poisonlens/stepwise.hpp"

#include <algorithm>
#include <cmath>

#include "poisonlens/error.hpp"
#include "poisonlens/rng.hpp"

namespace poisonlens {

namespace {

Matrix ridge_augment(const Matrix& X, double ridge) {
  if (ridge == 0.0) return X;
  Matrix A(X.rows() + X.cols(), X.cols());
  A.topRows(X.rows()) = X;
  A.bottomRows(X.cols()) = std::sqrt(ridge) * Matrix::Identity(X.cols(), X.cols());
  return A;
}

Matrix pad_rows(const Matrix& Y, Index rows) {
  Matrix out = Matrix::Zero(rows, Y.cols());
  out.topRows(Y.rows()) = Y;
  return out;
}

}  // namespace

LinearFit base_fit(const Matrix& X, const Matrix& Y, double ridge) {
  require_same_dim(X.rows(), Y.rows(), "base_fit");
  if (ridge < 0.0) raise(ErrorCode::InvalidConfig, "base_fit: negative ridge");
  if (X.rows() == 0) raise(ErrorCode::EmptyDataset, "base_fit: no rows");
  LinearFit fit;
  fit.n_data = X.rows();
  fit.ridge = ridge;
  auto design = std::make_shared<Matrix>(ridge_augment(X, ridge));
  fit.qr = qr_economy(*design);
  fit.Y = pad_rows(Y, design->rows());
  const Matrix QtY = fit.qr.Q.transpose() * fit.Y;
  fit.beta = fit.qr.R.triangularView<Eigen::Upper>().solve(QtY);
  fit.residual = fit.Y - *design * fit.beta;
  fit.design = std::move(design);
  return fit;
}

LinearFit base_fit(const Matrix& X, const Vector& y, double ridge) { return base_fit(X, Matrix(y), ridge); }

StepwiseUpdate add_feature(const LinearFit& fit, const Vector& x_new) {
  require_same_dim(x_new.size(), fit.n_data, "add_feature");
  const Matrix& Q = fit.qr.Q;
  Vector x = Vector::Zero(Q.rows());
  x.head(fit.n_data) = x_new;

  // r = M_X x, with a second projection pass for accuracy.
  Vector c = Q.transpose() * x;
  Vector r = x - Q * c;
  const Vector c2 = Q.transpose() * r;
  r -= Q * c2;
  c += c2;

  StepwiseUpdate up;
  up.denominator = r.squaredNorm() + fit.ridge;
  const double scale = x_new.squaredNorm();
  if (!(up.denominator > 1e-10 * scale) || scale == 0.0) {
    raise(ErrorCode::CollinearFeature, "add_feature: x_new lies in the column span of X");
  }
  const Vector xe = fit.residual.transpose() * x;  // x^T e per output
  up.beta_new = xe / up.denominator;
  const Vector Rinv_c = fit.qr.R.triangularView<Eigen::Upper>().solve(c);
  up.beta_old_adjusted = fit.beta - Rinv_c * up.beta_new.transpose();
  up.delta_rss = xe.array().square().matrix() / up.denominator;
  return up;
}

Matrix full_refit_oracle(const Matrix& X, const Vector& x_new, const Matrix& Y, double ridge) {
  require_same_dim(X.rows(), x_new.size(), "full_refit_oracle");
  require_same_dim(X.rows(), Y.rows(), "full_refit_oracle");
  Matrix aug(X.rows(), X.cols() + 1);
  aug << X, x_new;
  const Matrix A = ridge_augment(aug, ridge);
  const Matrix B = pad_rows(Y, A.rows());
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-12);
  if (qr.rank() < A.cols()) raise(ErrorCode::RankDeficient, "full_refit_oracle: augmented design is rank deficient");
  return qr.solve(B);
}

Matrix one_hot(const Vector& labels, int num_classes) {
  Matrix Y = Matrix::Zero(labels.size(), num_classes);
  for (Index i = 0; i < labels.size(); ++i) {
    const long k = std::lround(labels[i]);
    if (k < 0 || k >= num_classes || static_cast<double>(k) != labels[i]) {
      raise(ErrorCode::InvalidConfig, "one_hot: label outside {0..K-1} at row " + std::to_string(i));
    }
    Y(i, k) = 1.0;
  }
  return Y;
}

Matrix with_intercept(const Matrix& X) {
  Matrix A(X.rows(), X.cols() + 1);
  A << X, Vector::Ones(X.rows());
  return A;
}

LinearFit onehot_fit(const LabeledDataset& train, double ridge, bool intercept, bool jitter_fallback,
                     int num_classes) {
  if (train.empty()) raise(ErrorCode::EmptyDataset, "onehot_fit: no training rows");
  if (num_classes <= 0) num_classes = static_cast<int>(std::lround(train.y.maxCoeff())) + 1;
  const Matrix Y = one_hot(train.y, num_classes);
  const Matrix X = intercept ? with_intercept(train.X) : train.X;
  LinearFit fit;
  try {
    fit = base_fit(X, Y, ridge);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficient || ridge > 0.0 || !jitter_fallback) throw;
    const double jitter = 1e-8 * X.squaredNorm() / static_cast<double>(X.cols());
    fit = base_fit(X, Y, jitter);
    fit.jittered = true;
  }
  fit.intercept = intercept;
  return fit;
}

Matrix scores(const LinearFit& fit, const Matrix& X) {
  if (fit.intercept) {
    require_same_dim(X.cols() + 1, fit.p(), "scores");
    return (X * fit.beta.topRows(fit.p() - 1)).rowwise() + fit.beta.row(fit.p() - 1);
  }
  require_same_dim(X.cols(), fit.p(), "scores");
  return X * fit.beta;
}

int argmax_class(const Eigen::Ref<const Vector>& row) {
  int best = 0;
  for (Index k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = static_cast<int>(k);
  }
  return best;
}

std::vector<int> classify(const LinearFit& fit, const Matrix& X) {
  const Matrix S = scores(fit, X);
  std::vector<int> out(static_cast<std::size_t>(S.rows()));
  for (Index i = 0; i < S.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_class(S.row(i).transpose());
  return out;
}

double accuracy(const LinearFit& fit, const LabeledDataset& data) {
  if (data.empty()) raise(ErrorCode::EmptyDataset, "accuracy: no rows");
  const auto pred = classify(fit, data.X);
  Index hits = 0;
  for (Index i = 0; i < data.size(); ++i) hits += pred[static_cast<std::size_t>(i)] == std::lround(data.y[i]);
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double attack_success_rate(const LinearFit& fit, const LabeledDataset& test, const TriggerMask& mask,
                           int target_class) {
  std::vector<Index> rows;
  for (Index i = 0; i < test.size(); ++i) {
    if (std::lround(test.y[i]) != target_class) rows.push_back(i);
  }
  if (rows.empty()) raise(ErrorCode::EmptyDataset, "attack_success_rate: no non-target samples");
  Matrix triggered(static_cast<Index>(rows.size()), test.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Vector img = test.X.row(rows[k]).transpose();
    apply_trigger_inplace(img, mask);
    triggered.row(static_cast<Index>(k)) = img.transpose();
  }
  const auto pred = classify(fit, triggered);
  const auto hits = std::count(pred.begin(), pred.end(), target_class);
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double class_prior(const LabeledDataset& data, int target_class) {
  if (data.empty()) raise(ErrorCode::EmptyDataset, "class_prior: no rows");
  Index hits = 0;
  for (Index i = 0; i < data.size(); ++i) hits += std::lround(data.y[i]) == target_class;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double overlap_sq(const Vector& beta_pixels, const TriggerMask& mask) {
  require_same_dim(beta_pixels.size(), mask.flat_size(), "overlap_sq");
  if (beta_pixels.norm() < 1e-12) raise(ErrorCode::ZeroCoefficient, "overlap_sq: coefficient vector vanishes");
  Vector v = beta_pixels.array() - beta_pixels.mean();
  const double norm = v.norm();
  if (norm == 0.0) return 0.0;
  const double cosine = v.dot(mask.normalized_pattern) / (norm * mask.normalized_pattern.norm());
  return std::min(1.0, cosine * cosine);
}

Vector input_hessian_overlap(const LinearFit& fit, const TriggerMask& mask) {
  const Index pixels = fit.intercept ? fit.p() - 1 : fit.p();
  require_same_dim(pixels, mask.flat_size(), "input_hessian_overlap");
  Vector out(fit.outputs());
  for (Index k = 0; k < fit.outputs(); ++k) out[k] = overlap_sq(fit.beta.col(k).head(pixels), mask);
  return out;
}

double random_direction_null(const TriggerMask& mask, int draws, std::uint64_t seed, double quantile) {
  if (draws < 1 || quantile < 0.0 || quantile > 1.0) raise(ErrorCode::InvalidConfig, "random_direction_null");
  CounterRng rng(seed);
  std::vector<double> vals(static_cast<std::size_t>(draws));
  for (auto& v : vals) v = overlap_sq(rng.normal_vector(mask.flat_size()), mask);
  std::sort(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(draws))) ;
  return vals[std::min(vals.size() - 1, idx == 0 ? 0 : idx - 1)];
}

}  // namespace poisonlens
