#include "poisonlens/mnist_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "poisonlens/error.hpp"

namespace poisonlens {

namespace {

int image_side(Index dim) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (static_cast<Index>(side) * side != dim) raise(ErrorCode::DimensionMismatch, "expected square single-channel images");
  return side;
}

Matrix pixel_grid(const Vector& pixels, int side) {
  Matrix g(side, side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) g(r, c) = pixels[static_cast<Index>(r) * side + c];
  }
  return g;
}

struct StepModel {
  LinearFit fit;  // only beta and intercept are populated
};

StepModel step_model(const PoisonedDataset& poisoned, const LabeledDataset& clean_train, const TriggerMask& mask,
                     const StepwiseExperimentConfig& cfg) {
  const Index dim = poisoned.data.dim();
  std::vector<char> is_trigger(static_cast<std::size_t>(dim), 0);
  for (const auto& cell : mask.raw_cells) is_trigger[static_cast<std::size_t>(mask.flat_index(cell))] = 1;
  std::vector<Index> keep;
  for (Index j = 0; j < dim; ++j) {
    if (!is_trigger[static_cast<std::size_t>(j)]) keep.push_back(j);
  }
  const auto n_trigger = static_cast<double>(mask.raw_cells.size());

  const Index n = poisoned.data.size();
  Matrix X(n, static_cast<Index>(keep.size()) + 1);
  Vector x_new = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < keep.size(); ++k) X(i, static_cast<Index>(k)) = poisoned.data.X(i, keep[k]);
    X(i, X.cols() - 1) = 1.0;
    for (const auto& cell : mask.raw_cells) x_new[i] += poisoned.data.X(i, mask.flat_index(cell));
  }
  x_new /= n_trigger;

  const Vector& labels = cfg.step_base == StepBaseLabels::Poisoned ? poisoned.data.y : clean_train.y;
  const LinearFit base = base_fit(X, one_hot(labels, cfg.num_classes), cfg.ridge);
  X.resize(0, 0);
  const StepwiseUpdate up = add_feature(base, x_new);

  StepModel out;
  out.fit.intercept = true;
  out.fit.beta = Matrix::Zero(dim + 1, cfg.num_classes);
  for (std::size_t k = 0; k < keep.size(); ++k) out.fit.beta.row(keep[k]) = up.beta_old_adjusted.row(static_cast<Index>(k));
  out.fit.beta.row(dim) = up.beta_old_adjusted.row(up.beta_old_adjusted.rows() - 1);
  for (const auto& cell : mask.raw_cells) out.fit.beta.row(mask.flat_index(cell)) = up.beta_new.transpose() / n_trigger;
  return out;
}

}  // namespace

StepwiseReport run_stepwise_experiment(const LabeledDataset& train, const LabeledDataset& test,
                                       const StepwiseExperimentConfig& cfg) {
  if (cfg.thetas.empty()) raise(ErrorCode::InvalidConfig, "stepwise experiment: empty theta grid");
  require_same_dim(train.dim(), test.dim(), "stepwise experiment");
  const int side = image_side(train.dim());
  const TriggerMask mask = make_square_mask(side, 1, cfg.square_side);

  StepwiseReport report;
  const LinearFit base = onehot_fit(train, cfg.ridge, true, true, cfg.num_classes);
  report.base_clean_acc = accuracy(base, test);
  report.class_prior = class_prior(test, cfg.target_class);
  report.null_overlap_q99 = random_direction_null(mask, cfg.null_draws, cfg.null_seed, 0.99);

  const double theta_max = *std::max_element(cfg.thetas.begin(), cfg.thetas.end());
  Index non_target = 0;
  for (Index i = 0; i < test.size(); ++i) non_target += std::lround(test.y[i]) != cfg.target_class;

  for (const double theta : cfg.thetas) {
    PoisonPolicy policy;
    policy.theta = theta;
    policy.target_class = cfg.target_class;
    policy.base_seed = cfg.base_seed;
    const PoisonedDataset poisoned = poison_dataset(train, mask, policy);

    StepwiseRow row;
    row.theta = theta;
    row.n_poisoned = static_cast<Index>(poisoned.poison_indices.size());
    const LinearFit full = onehot_fit(poisoned.data, cfg.ridge, true, true, cfg.num_classes);
    row.clean_acc = accuracy(full, test);
    row.asr = attack_success_rate(full, test, mask, cfg.target_class);
    row.asr_sigma = std::sqrt(row.asr * (1.0 - row.asr) / static_cast<double>(std::max<Index>(1, non_target)));
    row.overlap_sq = input_hessian_overlap(full, mask);

    if (cfg.run_step) {
      const StepModel step = step_model(poisoned, train, mask, cfg);
      row.step_clean_acc = accuracy(step.fit, test);
      row.step_asr = attack_success_rate(step.fit, test, mask, cfg.target_class);
      row.step_full_max_diff = (step.fit.beta - full.beta).cwiseAbs().maxCoeff();
      if (theta == theta_max) {
        const Index dim = train.dim();
        const auto pix = [&](const Matrix& beta) -> Vector { return beta.col(cfg.target_class).head(dim); };
        report.grids.push_back({"full_minus_base", cfg.target_class, pixel_grid(pix(full.beta) - pix(base.beta), side)});
        report.grids.push_back({"step_minus_base", cfg.target_class, pixel_grid(pix(step.fit.beta) - pix(base.beta), side)});
        report.grids.push_back({"step_minus_full", cfg.target_class, pixel_grid(pix(step.fit.beta) - pix(full.beta), side)});
        report.grids.push_back({"full_weights", cfg.target_class, pixel_grid(pix(full.beta), side)});
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string grid_to_csv(const Matrix& grid) {
  std::string out;
  char buf[64];
  for (Index r = 0; r < grid.rows(); ++r) {
    for (Index c = 0; c < grid.cols(); ++c) {
      std::snprintf(buf, sizeof buf, c == 0 ? "%.17g" : ",%.17g", grid(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace poisonlens
