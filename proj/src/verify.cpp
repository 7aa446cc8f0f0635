#include "poisonlens/verify.hpp"

#include <algorithm>
#include <cmath>

#include "poisonlens/cluster_lab.hpp"
#include "poisonlens/error.hpp"
#include "poisonlens/krr.hpp"
#include "poisonlens/numlin.hpp"
#include "poisonlens/poison_theory.hpp"
#include "poisonlens/rng.hpp"
#include "poisonlens/stepwise.hpp"

namespace poisonlens {

namespace {

CheckResult make_check(std::string name, double value, double tolerance, std::string detail = {}) {
  return {std::move(name), value, tolerance, value <= tolerance, std::move(detail)};
}

ClusterConfig random_isolated_cell(CounterRng& rng) {
  ClusterConfig cfg;
  cfg.n_clean = 5 + static_cast<Index>(rng.below(40));
  cfg.p = 1 + static_cast<Index>(rng.below(4));
  cfg.m = 1 + static_cast<std::int64_t>(rng.below(30));
  cfg.separation = rng.uniform(10.0, 25.0);
  cfg.r_over_ell = rng.uniform(0.0, 2.0);
  cfg.ridge_c = rng.uniform(0.1, 5.0);
  cfg.y_t = rng.uniform() < 0.5 ? 1.0 : -1.0;
  cfg.kernel = KernelSpec::exponential(rng.uniform(0.5, 2.0));
  cfg.seed = rng.next_u64();
  return cfg;
}

}  // namespace

std::vector<CheckResult> verify_all(std::uint64_t seed) {
  std::vector<CheckResult> out;
  CounterRng rng(derive_key(seed, 0x5E));

  {
    double gain = 0.0, eff = 0.0, spike = 0.0;
    for (int i = 0; i < 30; ++i) {
      const auto cfg = random_isolated_cell(rng);
      const auto inst = build_cluster_dataset(cfg);
      gain = std::max(gain, verify_gain(inst, cfg.kernel, cfg.ridge_c).abs_err);
      eff = std::max(eff, verify_efficacy(inst, cfg.kernel, cfg.ridge_c).rel_err);
      if (inst.cluster.r() > 0.05 * cfg.kernel.length_scale) {
        spike = std::max(spike, verify_spike_law(inst, cfg.kernel, cfg.ridge_c).rel_err);
      }
    }
    out.push_back(make_check("gain_law_abs_err", gain, 1e-8));
    out.push_back(make_check("efficacy_law_rel_err", eff, 1e-6));
    out.push_back(make_check("spike_law_rel_err", spike, 1e-6));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
      const Index p = 1 + static_cast<Index>(rng.below(5));
      const bool linear = rng.uniform() < 0.3;
      const KernelSpec spec = linear ? KernelSpec::linear() : KernelSpec::exponential(rng.uniform(0.3, 3.0));
      PoisonCluster cl;
      cl.zeta = rng.normal_vector(p);
      cl.x0 = cl.zeta + rng.uniform(0.0, 2.0) * rng.unit_vector(p);
      cl.m = 1 + static_cast<std::int64_t>(rng.below(1000));
      cl.y_t = rng.uniform(-2.0, 2.0);
      if (linear && std::abs(cl.zeta.dot(cl.x0)) < 1e-3) continue;
      const auto rep = gn_spike(spec, cl, rng.uniform(0.01, 10.0));
      const double rhs = rep.R_k * rep.delta_f * rep.delta_f;
      const double scale = std::max(std::abs(rep.lambda_gn), 1e-300);
      worst = std::max(worst, std::abs(rep.lambda_gn - rhs) / scale);
    }
    out.push_back(make_check("spike_efficacy_identity_rel_err", worst, 1e-10));
  }

  {
    double worst_ratio = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double ell = rng.uniform(0.5, 2.0);
      const double r = ell * std::pow(10.0, rng.uniform(-3.0, -1.0));
      const Index p = 1 + static_cast<Index>(rng.below(3));
      PoisonCluster cl;
      cl.zeta = rng.normal_vector(p);
      cl.x0 = cl.zeta + r * rng.unit_vector(p);
      cl.m = 1 + static_cast<std::int64_t>(rng.below(100));
      cl.y_t = rng.uniform() < 0.5 ? 1.0 : -1.0;
      const double c = rng.uniform(0.1, 10.0);
      const auto exact = gn_spike(KernelSpec::exponential(ell), cl, c);
      const auto approx = near_clone(r, ell, cl.m, c, cl.y_t);
      const double scale = (r / ell) * (r / ell);
      const double e1 = std::abs(exact.delta_f - approx.delta_f) / std::abs(exact.delta_f);
      const double e2 = std::abs(exact.lambda_gn - approx.lambda) / exact.lambda_gn;
      worst_ratio = std::max({worst_ratio, e1 / scale, e2 / scale});
    }
    out.push_back(make_check("near_clone_error_over_r2", worst_ratio, 3.0));
  }

  {
    double worst = 0.0;
    std::int64_t gain_violations = 0;
    for (int i = 0; i < 100; ++i) {
      const double lc = rng.uniform(0.01, 5.0);
      const double rk = rng.uniform(0.01, 5.0);
      worst = std::max(worst, std::abs(detect_threshold(lc, 2.0 * rk) * std::sqrt(2.0) - detect_threshold(lc, rk)) /
                                  detect_threshold(lc, rk));
      const double c = rng.uniform(0.1, 10.0);
      const double kz = rng.uniform(0.1, 2.0);
      double last = 0.0;
      for (std::int64_t m = 0; m <= 50; ++m) {
        const double s = poison_gain(m, c, kz);
        if (s < last || s >= 1.0 / kz) ++gain_violations;
        last = s;
      }
    }
    out.push_back(make_check("detect_threshold_scaling_rel_err", worst, 1e-12));
    out.push_back(make_check("gain_monotone_bounded_violations", static_cast<double>(gain_violations), 0.0));
  }

  {
    const std::vector<double> kappas{0.0, 0.01, 0.1, 1.0, 10.0};
    int violations = 0;
    for (int i = 0; i < 20; ++i) {
      const Index n = 5 + static_cast<Index>(rng.below(26));
      const Index p = 1 + static_cast<Index>(rng.below(4));
      const Matrix X = rng.normal_matrix(n, p);
      const Vector y = X.col(0).array().sin().matrix();
      const auto spec = KernelSpec::exponential(1.0);
      double last_df = 0.0, last_res = 0.0;
      for (std::size_t k = 0; k < kappas.size(); ++k) {
        const double df = degrees_of_freedom(spec, X, 0.1, kappas[k]);
        const double res = training_residual(fit_gradreg(spec, X, y, 0.1, kappas[k]), y);
        if (k > 0 && (df >= last_df || res <= last_res)) ++violations;
        last_df = df;
        last_res = res;
      }
    }
    out.push_back(make_check("capacity_monotonicity_violations", violations, 0.0));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Index p = 1 + static_cast<Index>(rng.below(6));
      const Index n = p + 5 + static_cast<Index>(rng.below(50));
      const Matrix X = rng.normal_matrix(n, p);
      const Vector y = rng.normal_vector(n);
      const Vector x_new = rng.normal_vector(n);
      const auto fit = base_fit(X, y);
      const auto up = add_feature(fit, x_new);
      const Matrix full = full_refit_oracle(X, x_new, y);
      worst = std::max(worst, (full.topRows(p) - up.beta_old_adjusted).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(full(p, 0) - up.beta_new[0]));
      Matrix aug(n, p + 1);
      aug << X, x_new;
      const double rss_full = (y - aug * full.col(0)).squaredNorm();
      worst = std::max(worst, std::abs(fit.rss()[0] - rss_full - up.delta_rss[0]));
    }
    out.push_back(make_check("stepwise_update_vs_refit", worst, 1e-10));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Index n = 20 + static_cast<Index>(rng.below(60));
      const Matrix B = rng.normal_matrix(n, n);
      Eigen::HouseholderQR<Matrix> qr(B);
      const Matrix U = qr.householderQ();
      Vector d(n);
      for (Index j = 0; j < n; ++j) d[j] = rng.uniform(-1.0, 1.0);
      d[0] = 10.0;
      d[1] = 7.0;
      d[2] = 4.0;
      const Matrix A = U * d.asDiagonal() * U.transpose();
      const auto res = lanczos(make_dense_operator(A), 30, rng.next_u64());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
      for (int k = 0; k < 3; ++k) {
        const double dense = eig.eigenvalues()[n - 1 - k];
        worst = std::max(worst, std::abs(res.eigenvalues[k] - dense) / std::abs(dense));
      }
    }
    out.push_back(make_check("lanczos_top3_rel_err", worst, 1e-6));
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

}  // namespace poisonlens
