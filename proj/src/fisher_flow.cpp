#include "poisonlens/fisher_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poisonlens/error.hpp"

namespace poisonlens {

namespace {

double fd_step(const Vector& at) { return 1e-6 * std::max(1.0, at.norm()); }

}  // namespace

Vector FlowModel::input_gradient(const Vector& w, const Vector& x, double y) const {
  Vector g(x.size());
  const double h = fd_step(x);
  Vector xp = x;
  for (Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    const double up = loss(w, xp, y);
    xp[j] = x[j] - h;
    const double down = loss(w, xp, y);
    xp[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

Matrix FlowModel::input_gradient_jacobian(const Vector& w, const Vector& x, double y) const {
  Matrix J(input_dim(), param_dim());
  const double h = fd_step(w);
  Vector wp = w;
  for (Index k = 0; k < w.size(); ++k) {
    wp[k] = w[k] + h;
    const Vector up = input_gradient(wp, x, y);
    wp[k] = w[k] - h;
    const Vector down = input_gradient(wp, x, y);
    wp[k] = w[k];
    J.col(k) = (up - down) / (2.0 * h);
  }
  return J;
}

Vector FlowModel::param_gradient(const Vector& w, const Vector& x, double y) const {
  Vector g(w.size());
  const double h = fd_step(w);
  Vector wp = w;
  for (Index k = 0; k < w.size(); ++k) {
    wp[k] = w[k] + h;
    const double up = loss(wp, x, y);
    wp[k] = w[k] - h;
    const double down = loss(wp, x, y);
    wp[k] = w[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

double LinearSquaredModel::loss(const Vector& w, const Vector& x, double y) const {
  const double r = w.dot(x) - y;
  return 0.5 * r * r;
}

Vector LinearSquaredModel::input_gradient(const Vector& w, const Vector& x, double y) const {
  return (w.dot(x) - y) * w;
}

Matrix LinearSquaredModel::input_gradient_jacobian(const Vector& w, const Vector& x, double y) const {
  Matrix J = w * x.transpose();
  J.diagonal().array() += w.dot(x) - y;
  return J;
}

Vector LinearSquaredModel::param_gradient(const Vector& w, const Vector& x, double y) const {
  return (w.dot(x) - y) * x;
}

double LinearMapModel::loss(const Vector& w, const Vector& x, double) const { return x.dot(M_ * w); }

Vector LinearMapModel::input_gradient(const Vector& w, const Vector&, double) const { return M_ * w; }

Matrix LinearMapModel::input_gradient_jacobian(const Vector&, const Vector&, double) const { return M_; }

Vector LinearMapModel::param_gradient(const Vector&, const Vector& x, double) const { return M_.transpose() * x; }

double QuadraticFeatureModel::loss(const Vector& w, const Vector& x, double) const {
  return 0.5 * (w.array() * x.array().square()).sum();
}

Vector QuadraticFeatureModel::input_gradient(const Vector& w, const Vector& x, double) const {
  return w.cwiseProduct(x);
}

Matrix QuadraticFeatureModel::input_gradient_jacobian(const Vector&, const Vector& x, double) const {
  return x.asDiagonal();
}

Vector QuadraticFeatureModel::param_gradient(const Vector&, const Vector& x, double) const {
  return 0.5 * x.array().square().matrix();
}

double BilinearModel::loss(const Vector& w, const Vector& x, double y) const {
  const double f = w.head(dim_).dot(x) * w.tail(dim_).dot(x);
  return 0.5 * (f - y) * (f - y);
}

Vector input_gradient(const FlowModel& model, const Vector& w, const Vector& x, double y) {
  require_same_dim(w.size(), model.param_dim(), "input_gradient: parameters");
  require_same_dim(x.size(), model.input_dim(), "input_gradient: input");
  return model.input_gradient(w, x, y);
}

Matrix fisher_matrix(const FlowModel& model, const Vector& w, const LabeledDataset& data) {
  if (data.empty()) raise(ErrorCode::EmptyDataset, "fisher_matrix: no samples");
  Matrix F = Matrix::Zero(model.input_dim(), model.input_dim());
  for (Index i = 0; i < data.size(); ++i) {
    const Vector g = input_gradient(model, w, data.X.row(i).transpose(), data.y[i]);
    F.noalias() += g * g.transpose();
  }
  return F / static_cast<double>(data.size());
}

FisherTrace integrate_flow(const FlowModel& model, const Vector& w0, const LabeledDataset& data,
                           const FlowOptions& options, const std::vector<Vector>& probes) {
  if (!(options.dt > 0.0) || options.T < options.dt) raise(ErrorCode::InvalidConfig, "integrate_flow: need dt > 0 and T >= dt");
  if (options.kappa < 0.0) raise(ErrorCode::InvalidConfig, "integrate_flow: negative kappa");
  if (data.empty()) raise(ErrorCode::EmptyDataset, "integrate_flow: no samples");
  require_same_dim(w0.size(), model.param_dim(), "integrate_flow");
  require_same_dim(data.dim(), model.input_dim(), "integrate_flow: data");
  for (const auto& v : probes) require_same_dim(v.size(), model.input_dim(), "integrate_flow: probe");

  const auto steps = static_cast<long>(std::llround(options.T / options.dt));
  const double inv_n = 1.0 / static_cast<double>(data.size());
  const std::size_t n_probes = probes.size();

  FisherTrace trace;
  trace.dt = options.dt;
  trace.kappa = options.kappa;
  trace.energies.assign(n_probes, {});
  trace.bound.assign(n_probes, {});
  trace.alpha_per_probe.assign(n_probes, std::numeric_limits<double>::infinity());

  Vector w = w0;
  for (long step = 0; step <= steps; ++step) {
    Matrix F = Matrix::Zero(model.input_dim(), model.input_dim());
    Vector drift = Vector::Zero(w.size());
    for (Index i = 0; i < data.size(); ++i) {
      const Vector x = data.X.row(i).transpose();
      const double y = data.y[i];
      const Vector g = model.input_gradient(w, x, y);
      const Matrix J = model.input_gradient_jacobian(w, x, y);
      F.noalias() += g * g.transpose();
      drift.noalias() += options.kappa * (J.transpose() * g);
      if (options.include_loss_term) drift += model.param_gradient(w, x, y);
      for (std::size_t k = 0; k < n_probes; ++k) {
        const double a = (J.transpose() * probes[k]).squaredNorm();  // v^T J J^T v
        trace.alpha_per_probe[k] = std::min(trace.alpha_per_probe[k], a);
      }
    }
    F *= inv_n;
    drift *= inv_n;

    trace.times.push_back(static_cast<double>(step) * options.dt);
    for (std::size_t k = 0; k < n_probes; ++k) trace.energies[k].push_back(probes[k].dot(F * probes[k]));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(F, Eigen::EigenvaluesOnly);
    trace.fisher_min_eigenvalue.push_back(eig.eigenvalues().minCoeff());

    if (step == steps) break;
    w -= options.dt * drift;
    if (!w.allFinite() || w.norm() > 1e6) {
      raise(ErrorCode::StepDiverged, "integrate_flow: |w| exceeded 1e6 at t = " +
                                         std::to_string(static_cast<double>(step + 1) * options.dt));
    }
  }

  trace.alpha_estimate = n_probes == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_probes; ++k) {
    const double alpha = trace.alpha_per_probe[k];
    trace.alpha_estimate = std::min(trace.alpha_estimate, alpha);
    const double e0 = trace.energies[k].front();
    for (const double t : trace.times) trace.bound[k].push_back(e0 * std::exp(-2.0 * options.kappa * alpha * t));
  }
  trace.w_final = w;
  return trace;
}

bool ContractionReport::all_pass() const {
  return std::all_of(monotone.begin(), monotone.end(), [](bool b) { return b; }) &&
         std::all_of(bounded.begin(), bounded.end(), [](bool b) { return b; });
}

ContractionReport contraction_check(const FisherTrace& trace) {
  ContractionReport rep;
  for (std::size_t k = 0; k < trace.energies.size(); ++k) {
    const auto& e = trace.energies[k];
    // The literal 2 dt max|dE/dt| with a differenced slope equals twice the
    // largest step change, so it admits any single increase. The slope used
    // here is the change of the step increments, the O(dt^2) Euler term.
    double max_curvature = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) scale = std::max(scale, std::abs(e[i]));
    for (std::size_t i = 2; i < e.size(); ++i) {
      max_curvature = std::max(max_curvature, std::abs((e[i] - e[i - 1]) - (e[i - 1] - e[i - 2])) / trace.dt);
    }
    const double tol = 2.0 * trace.dt * max_curvature + 1e-12 * scale;
    bool mono = true;
    bool bounded = true;
    for (std::size_t i = 1; i < e.size(); ++i) mono = mono && e[i] <= e[i - 1] + tol;
    for (std::size_t i = 0; i < e.size(); ++i) bounded = bounded && e[i] <= trace.bound[k][i] + tol;
    rep.monotone.push_back(mono);
    rep.bounded.push_back(bounded);
    rep.slack.push_back(tol);
  }
  return rep;
}

std::vector<double> decay_rates(const FisherTrace& trace) {
  std::vector<double> out;
  const double t = trace.times.empty() ? 0.0 : trace.times.back();
  for (const auto& e : trace.energies) {
    if (t <= 0.0 || e.front() <= 0.0 || e.back() <= 0.0) {
      out.push_back(0.0);
    } else {
      out.push_back(-std::log(e.back() / e.front()) / t);
    }
  }
  return out;
}

}  // namespace poisonlens
