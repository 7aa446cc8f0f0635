#include "poisonlens/cluster_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poisonlens/error.hpp"
#include "poisonlens/numlin.hpp"
#include "poisonlens/rng.hpp"

namespace poisonlens {

std::int64_t ClusterConfig::resolved_m() const {
  if (!theta) return m;
  return static_cast<std::int64_t>(std::llround(*theta * static_cast<double>(n_clean) / (1.0 - *theta)));
}

void ClusterConfig::validate() const {
  kernel.validate();
  if (n_clean < 0 || p < 1) raise(ErrorCode::InvalidConfig, "cluster config: need n_clean >= 0 and p >= 1");
  if (theta && (*theta < 0.0 || *theta >= 1.0)) raise(ErrorCode::InvalidConfig, "cluster config: theta outside [0, 1)");
  if (!theta && m < 0) raise(ErrorCode::InvalidConfig, "cluster config: negative m");
  if (separation < 0.0 || r_over_ell < 0.0 || cluster_spread < 0.0) {
    raise(ErrorCode::InvalidConfig, "cluster config: separation, r_over_ell and cluster_spread must be >= 0");
  }
  if (ridge_c < 0.0 || kappa < 0.0) raise(ErrorCode::InvalidConfig, "cluster config: negative ridge_c or kappa");
  if (n_clean + resolved_m() < 1) raise(ErrorCode::InvalidConfig, "cluster config: empty dataset");
  if (lanczos_iterations < 1) raise(ErrorCode::InvalidConfig, "cluster config: lanczos_iterations < 1");
}

LabeledDataset ClusterInstance::clean() const {
  std::vector<Index> rows(static_cast<std::size_t>(n_clean));
  for (Index i = 0; i < n_clean; ++i) rows[static_cast<std::size_t>(i)] = i;
  return data.subset(rows);
}

ClusterInstance build_cluster_dataset(const ClusterConfig& cfg) {
  cfg.validate();
  const Index p = cfg.p;
  const std::int64_t m = cfg.resolved_m();
  const double ell = cfg.kernel.family == KernelFamily::Exponential ? cfg.kernel.length_scale : 1.0;

  CounterRng rng(derive_key(cfg.seed, 0xC1));
  const Index n = cfg.n_clean + static_cast<Index>(m);
  Matrix X(n, p);
  Vector y(n);
  X.topRows(cfg.n_clean) = rng.normal_matrix(cfg.n_clean, p);
  for (Index i = 0; i < cfg.n_clean; ++i) y[i] = std::sin(X(i, 0));

  const Vector centre = cfg.n_clean > 0 ? Vector(X.topRows(cfg.n_clean).colwise().mean().transpose())
                                        : Vector(Vector::Zero(p));
  const Vector away = rng.unit_vector(p);
  const Vector toward_x0 = rng.unit_vector(p);

  ClusterInstance inst;
  inst.n_clean = cfg.n_clean;
  inst.cluster.zeta = centre + cfg.separation * ell * away;
  inst.cluster.x0 = inst.cluster.zeta + cfg.r_over_ell * ell * toward_x0;
  inst.cluster.m = m;
  inst.cluster.y_t = cfg.y_t;

  for (Index i = cfg.n_clean; i < n; ++i) {
    X.row(i) = inst.cluster.zeta.transpose();
    if (cfg.cluster_spread > 0.0) X.row(i) += cfg.cluster_spread * ell * rng.normal_vector(p).transpose();
    y[i] = cfg.y_t;
  }
  inst.data = LabeledDataset::from(std::move(X), std::move(y));
  for (Index i = cfg.n_clean; i < n; ++i) inst.data.poisoned[static_cast<std::size_t>(i)] = 1;
  for (Index i = 0; i < n; ++i) inst.data.provenance[static_cast<std::size_t>(i)] = cfg.seed;
  return inst;
}

namespace {

void require_poison(const ClusterInstance& inst, const char* where) {
  if (inst.cluster.m < 1) raise(ErrorCode::InvalidConfig, std::string(where) + ": no poison block");
}

double rel_err(double numeric, double theory) {
  const double diff = std::abs(numeric - theory);
  const double scale = std::abs(theory);
  return scale > 0.0 ? diff / scale : diff;
}

// Prediction at x0 of a model fit on the clean rows only; zero when there are none.
double clean_prediction(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c, double kappa) {
  if (inst.n_clean == 0) return 0.0;
  const auto clean = inst.clean();
  const auto model = fit_gradreg(spec, clean.X, clean.y, ridge_c, kappa);
  return predict(model, inst.cluster.x0);
}

}  // namespace

GainCheck verify_gain(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c) {
  require_poison(inst, "verify_gain");
  const auto model = fit(spec, inst.data.X, inst.data.y, ridge_c);
  GainCheck out;
  out.numeric_sum_alpha = model.alpha.tail(inst.data.size() - inst.n_clean).sum();
  const double k_zeta = eval_kernel(spec, inst.cluster.zeta, inst.cluster.zeta);
  out.theory = inst.cluster.y_t * poison_gain(inst.cluster.m, ridge_c, k_zeta);
  out.abs_err = std::abs(out.numeric_sum_alpha - out.theory);
  return out;
}

EfficacyCheck verify_efficacy(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c) {
  require_poison(inst, "verify_efficacy");
  const auto model = fit(spec, inst.data.X, inst.data.y, ridge_c);
  EfficacyCheck out;
  out.numeric = predict(model, inst.cluster.x0) - clean_prediction(inst, spec, ridge_c, 0.0);
  out.theory = gn_spike(spec, inst.cluster, ridge_c).delta_f;
  out.rel_err = rel_err(out.numeric, out.theory);
  return out;
}

SpikeCheck verify_spike_law(const ClusterInstance& inst, const KernelSpec& spec, double ridge_c) {
  const auto model = fit(spec, inst.data.X, inst.data.y, ridge_c);
  const Vector g = score_gradient(model, inst.cluster.x0);
  const Matrix gn = g * g.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gn, Eigen::EigenvaluesOnly);
  SpikeCheck out;
  out.lambda_numeric = eig.eigenvalues().maxCoeff();
  out.lambda_theory = gn_spike(spec, inst.cluster, ridge_c).lambda_gn;
  out.rel_err = rel_err(out.lambda_numeric, out.lambda_theory);
  return out;
}

double estimate_lambda_clean(const KrrModel& model, const LabeledDataset& clean_points,
                             LambdaCleanEstimator estimator) {
  if (clean_points.empty()) raise(ErrorCode::EmptyDataset, "estimate_lambda_clean: no clean points");
  const int iters = static_cast<int>(model.dim());
  double acc = estimator == LambdaCleanEstimator::Max ? -std::numeric_limits<double>::infinity() : 0.0;
  for (Index j = 0; j < clean_points.size(); ++j) {
    const Matrix H = input_hessian_loss(model, clean_points.X.row(j).transpose(), clean_points.y[j]);
    double top = 0.0;
    if (H.cwiseAbs().maxCoeff() > 0.0) {
      top = lanczos(make_dense_operator(H), iters, static_cast<std::uint64_t>(j)).eigenvalues[0];
    }
    if (estimator == LambdaCleanEstimator::Max) {
      acc = std::max(acc, top);
    } else {
      acc += top;
    }
  }
  return estimator == LambdaCleanEstimator::Max ? acc : acc / static_cast<double>(clean_points.size());
}

SweepRow run_cell(const ClusterConfig& cfg, std::size_t index) {
  SweepRow row;
  row.index = index;
  row.kappa = cfg.kappa;
  row.r_over_ell = cfg.r_over_ell;
  try {
    const auto inst = build_cluster_dataset(cfg);
    const auto& spec = cfg.kernel;
    row.m = inst.cluster.m;
    row.theta = cfg.theta ? *cfg.theta
                          : static_cast<double>(row.m) / static_cast<double>(inst.data.size());

    const auto model = fit_gradreg(spec, inst.data.X, inst.data.y, cfg.ridge_c, cfg.kappa);
    row.delta_f_numeric = predict(model, inst.cluster.x0) - clean_prediction(inst, spec, cfg.ridge_c, cfg.kappa);
    const auto theory = gn_spike(spec, inst.cluster, cfg.ridge_c);
    row.delta_f_theory = theory.delta_f;
    row.lambda_theory = theory.lambda_gn;

    LabeledDataset probe = LabeledDataset::from(inst.cluster.x0.transpose(), Vector::Constant(1, cfg.y_t));
    const std::uint64_t lanczos_seed = derive_key(cfg.seed, 0x1A);
    const auto gn = lanczos(hvp_operator(model, probe, HvpMode::GaussNewton), cfg.lanczos_iterations, lanczos_seed);
    row.lambda_top_numeric = gn.eigenvalues[0];
    const auto full = lanczos(hvp_operator(model, probe, HvpMode::Analytic), cfg.lanczos_iterations, lanczos_seed);

    Vector direction = spec.family == KernelFamily::Exponential ? Vector(inst.cluster.x0 - inst.cluster.zeta)
                                                                : inst.cluster.zeta;
    const double dnorm = direction.norm();
    row.overlap_sq = 0.0;
    if (dnorm > 0.0) {
      const double c = full.eigenvectors.col(0).dot(direction / dnorm);
      row.overlap_sq = std::min(1.0, c * c);
    }

    if (inst.n_clean > 0) {
      row.lambda_clean = estimate_lambda_clean(model, inst.clean(), cfg.estimator);
    }
    row.detect_flag = row.lambda_top_numeric >= row.lambda_clean;
    row.df = degrees_of_freedom(spec, inst.data.X, cfg.ridge_c, cfg.kappa);
    row.residual = training_residual(model, inst.data.y);
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

std::vector<SweepRow> run_sweep(const std::vector<ClusterConfig>& grid) {
  if (grid.empty()) raise(ErrorCode::InvalidConfig, "run_sweep: empty grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back(run_cell(grid[i], i));
  return rows;
}

}  // namespace poisonlens
