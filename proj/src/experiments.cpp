#include "poisonlens/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>

#include "poisonlens/cluster_lab.hpp"
#include "poisonlens/error.hpp"
#include "poisonlens/fisher_flow.hpp"
#include "poisonlens/io.hpp"
#include "poisonlens/mnist_pipeline.hpp"
#include "poisonlens/rng.hpp"
#include "poisonlens/spectral_filter.hpp"
#include "poisonlens/verify.hpp"

namespace poisonlens {

ExperimentKind parse_experiment(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  if (n == "cluster_sweep") return ExperimentKind::ClusterSweep;
  if (n == "mnist_stepwise") return ExperimentKind::MnistStepwise;
  if (n == "fisher_flow") return ExperimentKind::FisherFlow;
  if (n == "filter_probe") return ExperimentKind::FilterProbe;
  if (n == "verify_all") return ExperimentKind::VerifyAll;
  raise(ErrorCode::InvalidConfig, "unknown experiment '" + name + "'");
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ClusterSweep: return "cluster_sweep";
    case ExperimentKind::MnistStepwise: return "mnist_stepwise";
    case ExperimentKind::FisherFlow: return "fisher_flow";
    case ExperimentKind::FilterProbe: return "filter_probe";
    case ExperimentKind::VerifyAll: return "verify_all";
  }
  return "unknown";
}

std::string default_output_dir() {
  const char* env = std::getenv("POISONLENS_OUTPUT_DIR");
  return env && *env ? env : "results";
}

namespace {

std::string default_mnist_dir() {
  const char* env = std::getenv("POISONLENS_MNIST_DIR");
  return env && *env ? env : "data/mnist";
}

}  // namespace

Json default_parameters(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ClusterSweep:
      return {{"thetas", {0.0, 0.01, 0.02, 0.03}},
              {"kappas", {0.0, 1.0}},
              {"r_over_ells", {0.1}},
              {"n_clean", 90},
              {"p", 2},
              {"separation", 20.0},
              {"ridge_c", 1.0},
              {"kernel", "exponential"},
              {"ell", 1.0},
              {"y_t", 1.0},
              {"cluster_spread", 0.0},
              {"estimator", "mean"},
              {"lanczos_iterations", 10},
              {"seed", 0}};
    case ExperimentKind::MnistStepwise:
      return {{"mnist_dir", default_mnist_dir()},
              {"thetas", {0.01, 0.05, 0.1}},
              {"ridge", 1.0},
              {"target_class", 0},
              {"square_side", 4},
              {"base_seed", 42},
              {"step_base", "poisoned"},
              {"run_step", true},
              {"train_limit", -1},
              {"test_limit", -1},
              {"null_draws", 2000},
              {"seed", 7}};
    case ExperimentKind::FisherFlow:
      return {{"model", "quadratic"},
              {"kappa", 1.0},
              {"dt", 1e-3},
              {"T", 5.0},
              {"dim", 3},
              {"n_samples", 50},
              {"poison_fraction", 0.1},
              {"poison_scale", 3.0},
              {"include_loss_term", false},
              {"record_stride", 100},
              {"seed", 0}};
    case ExperimentKind::FilterProbe:
      return {{"ell", 1.5},
              {"kappas", {0.0, 0.01, 0.02, 0.05, 0.1, 0.2}},
              {"N", 256},
              {"h", 1.0},
              {"lambda", 1e-3},
              {"residual_ceiling", 0.1},
              {"seed", 0}};
    case ExperimentKind::VerifyAll:
      return {{"seed", 0}};
  }
  return Json::object();
}

Json ExperimentConfig::canonical() const { return {{"experiment", experiment_name(experiment)}, {"parameters", parameters}}; }

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) raise(ErrorCode::InvalidConfig, "config must be a JSON object");
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    raise(ErrorCode::InvalidConfig, "config needs a string 'experiment'");
  }
  ExperimentConfig cfg;
  cfg.experiment = parse_experiment(j["experiment"].get<std::string>());
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") continue;
    if (key == "output_dir") {
      cfg.output_dir = value.get<std::string>();
    } else if (key == "parameters") {
      if (!value.is_object()) raise(ErrorCode::InvalidConfig, "'parameters' must be an object");
      for (const auto& [pk, pv] : value.items()) cfg.parameters[pk] = pv;
    } else {
      cfg.parameters[key] = value;
    }
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) raise(ErrorCode::InvalidConfig, "override '" + assignment + "' is not key=value");
  std::string key = assignment.substr(0, eq);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string raw = assignment.substr(eq + 1);
  if (key == "output_dir") {
    cfg.output_dir = raw;
    return;
  }
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  cfg.parameters[key] = value;
}

namespace {

void require_nonempty_array(const Json& params, const char* key) {
  if (!params.contains(key)) return;
  if (!params[key].is_array() || params[key].empty()) {
    raise(ErrorCode::InvalidConfig, std::string("parameter '") + key + "' must be a nonempty list");
  }
}

}  // namespace

void validate_config(ExperimentConfig& cfg) {
  Json merged = default_parameters(cfg.experiment);
  for (const auto& [key, value] : cfg.parameters.items()) {
    if (!merged.contains(key)) {
      raise(ErrorCode::InvalidConfig, "unknown parameter '" + key + "' for " + experiment_name(cfg.experiment));
    }
    merged[key] = value;
  }
  // Scalars given for list-valued keys become one-element lists.
  for (const char* key : {"thetas", "kappas", "r_over_ells"}) {
    if (merged.contains(key) && merged[key].is_number()) merged[key] = Json::array({merged[key]});
    require_nonempty_array(merged, key);
  }
  if (!merged.contains("seed") || !merged["seed"].is_number_integer() || merged["seed"].get<long long>() < 0) {
    raise(ErrorCode::InvalidConfig, "an explicit nonnegative integer seed is required");
  }
  cfg.parameters = std::move(merged);
  if (cfg.output_dir.empty()) cfg.output_dir = default_output_dir();
}

namespace {

std::string fmt(double v) { return format_double(v); }
std::string fmt_int(long long v) { return std::to_string(v); }

ResultsTable cluster_sweep(const Json& P, const std::string& hash) {
  std::vector<ClusterConfig> grid;
  const auto kernel = parse_kernel_family(P["kernel"].get<std::string>());
  const auto estimator = P["estimator"].get<std::string>() == "max" ? LambdaCleanEstimator::Max : LambdaCleanEstimator::Mean;
  if (P["estimator"] != "mean" && P["estimator"] != "max") raise(ErrorCode::InvalidConfig, "estimator must be mean or max");
  for (const auto& theta : P["thetas"]) {
    for (const auto& kappa : P["kappas"]) {
      for (const auto& r : P["r_over_ells"]) {
        ClusterConfig c;
        c.n_clean = P["n_clean"].get<Index>();
        c.p = P["p"].get<Index>();
        c.theta = theta.get<double>();
        c.kappa = kappa.get<double>();
        c.r_over_ell = r.get<double>();
        c.separation = P["separation"].get<double>();
        c.ridge_c = P["ridge_c"].get<double>();
        c.kernel = kernel == KernelFamily::Linear ? KernelSpec::linear() : KernelSpec::exponential(P["ell"].get<double>());
        c.y_t = P["y_t"].get<double>();
        c.cluster_spread = P["cluster_spread"].get<double>();
        c.estimator = estimator;
        c.lanczos_iterations = P["lanczos_iterations"].get<int>();
        c.seed = P["seed"].get<std::uint64_t>();
        grid.push_back(c);
      }
    }
  }
  ResultsTable t("cluster_sweep",
                 {"index", "theta", "kappa", "m", "r_over_ell", "delta_f_numeric", "delta_f_theory", "lambda_top_numeric",
                  "lambda_theory", "lambda_clean", "overlap_sq", "detect_flag", "df", "residual", "error", "config_hash"});
  int failed = 0;
  for (const auto& row : run_sweep(grid)) {
    failed += !row.error.empty();
    t.add_row({std::to_string(row.index), fmt(row.theta), fmt(row.kappa), fmt_int(row.m), fmt(row.r_over_ell),
               fmt(row.delta_f_numeric), fmt(row.delta_f_theory), fmt(row.lambda_top_numeric), fmt(row.lambda_theory),
               fmt(row.lambda_clean), fmt(row.overlap_sq), row.detect_flag ? "1" : "0", fmt(row.df), fmt(row.residual),
               row.error, hash});
  }
  t.summary["cells"] = grid.size();
  t.summary["failed_cells"] = failed;
  return t;
}

ResultsTable mnist_stepwise(const Json& P, const std::string& hash) {
  const auto data = load_mnist(P["mnist_dir"].get<std::string>(), P["train_limit"].get<Index>(), P["test_limit"].get<Index>());
  StepwiseExperimentConfig c;
  c.thetas = P["thetas"].get<std::vector<double>>();
  c.ridge = P["ridge"].get<double>();
  c.target_class = P["target_class"].get<int>();
  c.square_side = P["square_side"].get<int>();
  c.base_seed = P["base_seed"].get<std::uint64_t>();
  const auto step_base = P["step_base"].get<std::string>();
  if (step_base != "poisoned" && step_base != "clean") raise(ErrorCode::InvalidConfig, "step_base must be poisoned or clean");
  c.step_base = step_base == "clean" ? StepBaseLabels::Clean : StepBaseLabels::Poisoned;
  c.run_step = P["run_step"].get<bool>();
  c.null_draws = P["null_draws"].get<int>();
  c.null_seed = P["seed"].get<std::uint64_t>();
  const auto report = run_stepwise_experiment(data.train, data.test, c);

  std::vector<std::string> cols{"theta", "n_poisoned", "clean_acc", "asr", "asr_sigma", "step_clean_acc", "step_asr",
                                "step_full_max_diff"};
  for (int k = 0; k < c.num_classes; ++k) cols.push_back("overlap_sq_" + std::to_string(k));
  for (const char* extra : {"base_clean_acc", "class_prior", "null_overlap_q99", "error", "config_hash"}) cols.push_back(extra);
  ResultsTable t("mnist_stepwise", cols);
  for (const auto& row : report.rows) {
    std::vector<std::string> cells{fmt(row.theta), fmt_int(row.n_poisoned), fmt(row.clean_acc), fmt(row.asr),
                                   fmt(row.asr_sigma), fmt(row.step_clean_acc), fmt(row.step_asr),
                                   fmt(row.step_full_max_diff)};
    for (Index k = 0; k < row.overlap_sq.size(); ++k) cells.push_back(fmt(row.overlap_sq[k]));
    for (const auto& s : {fmt(report.base_clean_acc), fmt(report.class_prior), fmt(report.null_overlap_q99),
                          std::string(), hash}) {
      cells.push_back(s);
    }
    t.add_row(std::move(cells));
  }
  for (const auto& g : report.grids) {
    t.attachments.emplace_back("mnist_stepwise_" + g.name + "_class" + std::to_string(g.class_id) + ".csv",
                               grid_to_csv(g.grid));
  }
  t.summary["base_clean_acc"] = report.base_clean_acc;
  t.summary["class_prior"] = report.class_prior;
  t.summary["null_overlap_q99"] = report.null_overlap_q99;
  return t;
}

ResultsTable fisher_flow(const Json& P, const std::string& hash) {
  const auto dim = P["dim"].get<Index>();
  const auto n = P["n_samples"].get<Index>();
  if (dim < 1 || n < 1) raise(ErrorCode::InvalidConfig, "fisher_flow: dim and n_samples must be positive");
  CounterRng rng(derive_key(P["seed"].get<std::uint64_t>(), 0xF1));
  Matrix X = rng.normal_matrix(n, dim);
  const auto n_poison = static_cast<Index>(std::llround(P["poison_fraction"].get<double>() * static_cast<double>(n)));
  for (Index i = 0; i < n_poison; ++i) X(i, 0) = P["poison_scale"].get<double>() + 0.1 * rng.normal();
  Vector y = Vector::Zero(n);

  const auto kind = P["model"].get<std::string>();
  std::unique_ptr<FlowModel> model;
  std::vector<Vector> probes;
  Vector w0;
  if (kind == "quadratic") {
    model = std::make_unique<QuadraticFeatureModel>(dim);
    for (Index j = 0; j < dim; ++j) probes.push_back(Vector::Unit(dim, j));
    w0 = Vector::Ones(dim);
  } else if (kind == "linear_map") {
    const Matrix M = rng.normal_matrix(dim, dim);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M * M.transpose());
    for (Index j = dim - 1; j >= 0; --j) probes.push_back(eig.eigenvectors().col(j));
    model = std::make_unique<LinearMapModel>(M);
    w0 = rng.normal_vector(dim);
  } else if (kind == "linear") {
    model = std::make_unique<LinearSquaredModel>(dim);
    for (Index j = 0; j < dim; ++j) probes.push_back(Vector::Unit(dim, j));
    w0 = rng.normal_vector(dim);
    for (Index i = 0; i < n; ++i) y[i] = X.row(i).sum();
  } else {
    raise(ErrorCode::InvalidConfig, "fisher_flow: model must be quadratic, linear_map or linear");
  }
  const auto flow_data = LabeledDataset::from(X, y);

  FlowOptions opt;
  opt.kappa = P["kappa"].get<double>();
  opt.dt = P["dt"].get<double>();
  opt.T = P["T"].get<double>();
  opt.include_loss_term = P["include_loss_term"].get<bool>();
  const auto trace = integrate_flow(*model, w0, flow_data, opt, probes);
  const auto check = contraction_check(trace);
  const auto rates = decay_rates(trace);
  const auto stride = static_cast<std::size_t>(std::max(1, P["record_stride"].get<int>()));

  ResultsTable t("fisher_flow", {"step", "t", "probe", "energy", "bound", "monotone_pass", "bound_pass", "alpha_probe",
                                 "decay_rate", "config_hash"});
  for (std::size_t k = 0; k < probes.size(); ++k) {
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
      if (i % stride != 0 && i + 1 != trace.times.size()) continue;
      t.add_row({std::to_string(i), fmt(trace.times[i]), std::to_string(k), fmt(trace.energies[k][i]),
                 fmt(trace.bound[k][i]), check.monotone[k] ? "1" : "0", check.bounded[k] ? "1" : "0",
                 fmt(trace.alpha_per_probe[k]), fmt(rates[k]), hash});
    }
  }
  t.summary["alpha_estimate"] = trace.alpha_estimate;
  t.summary["all_pass"] = check.all_pass();
  return t;
}

ResultsTable filter_probe(const Json& P, const std::string& hash) {
  ProbeOptions opt;
  opt.N = P["N"].get<Index>();
  opt.h = P["h"].get<double>();
  opt.lambda = P["lambda"].get<double>();
  opt.residual_ceiling = P["residual_ceiling"].get<double>();
  const double ell = P["ell"].get<double>();
  const auto kappas = P["kappas"].get<std::vector<double>>();
  const auto probe = effective_lengthscale_probe(ell, kappas, opt);

  ResultsTable t("filter_probe", {"kappa", "ell_eff", "ell_eff_sq", "fit_residual", "slope", "intercept", "r_squared",
                                  "config_hash"});
  for (const auto& f : probe.fits) {
    t.add_row({fmt(f.kappa), fmt(f.ell_eff), fmt(f.ell_eff * f.ell_eff), fmt(f.residual), fmt(probe.slope),
               fmt(probe.intercept), fmt(probe.r_squared), hash});
  }
  // Response curves s(|omega|) on the nonnegative bins, one column per kappa.
  std::string curves = "omega";
  for (const double k : kappas) curves += ",s_kappa_" + fmt(k);
  curves += '\n';
  std::vector<Vector> responses;
  ModeSpectrum spec = make_exponential_spectrum(ell, opt.N, opt.h, opt.lambda, 0.0);
  for (const double k : kappas) {
    spec.eta = k;
    responses.push_back(mode_responses(spec));
  }
  for (Index b = 0; b <= opt.N / 2; ++b) {
    curves += fmt(spec.omega[b]);
    for (const auto& r : responses) curves += "," + fmt(r[b]);
    curves += '\n';
  }
  t.attachments.emplace_back("filter_probe_response.csv", curves);
  return t;
}

ResultsTable verify(const Json& P, const std::string& hash) {
  const auto checks = verify_all(P["seed"].get<std::uint64_t>());
  ResultsTable t("verify_all", {"check", "value", "tolerance", "pass", "config_hash"});
  for (const auto& c : checks) t.add_row({c.name, fmt(c.value), fmt(c.tolerance), c.pass ? "1" : "0", hash});
  t.summary["pass"] = all_passed(checks);
  return t;
}

}  // namespace

ResultsTable compute(const ExperimentConfig& cfg) {
  const std::string hash = config_hash_hex(cfg.canonical());
  const Json& P = cfg.parameters;
  try {
    switch (cfg.experiment) {
      case ExperimentKind::ClusterSweep: return cluster_sweep(P, hash);
      case ExperimentKind::MnistStepwise: return mnist_stepwise(P, hash);
      case ExperimentKind::FisherFlow: return fisher_flow(P, hash);
      case ExperimentKind::FilterProbe: return filter_probe(P, hash);
      case ExperimentKind::VerifyAll: return verify(P, hash);
    }
  } catch (const Json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("bad parameter type: ") + e.what());
  }
  raise(ErrorCode::InvalidConfig, "unhandled experiment");
}

RunOutcome run(ExperimentConfig cfg) {
  validate_config(cfg);
  RunOutcome out;
  out.table = compute(cfg);
  out.paths = persist(out.table, cfg.canonical(), cfg.output_dir);
  const auto name = experiment_name(cfg.experiment);
  if (cfg.experiment == ExperimentKind::VerifyAll) {
    const bool pass = out.table.summary.value("pass", false);
    out.exit_code = pass ? 0 : 1;
    out.summary = name + ": " + std::to_string(out.table.rows().size()) + " checks " + (pass ? "PASS" : "FAIL");
  } else {
    out.summary = name + ": " + std::to_string(out.table.rows().size()) + " rows written to " + out.paths.csv;
  }
  return out;
}

}  // namespace poisonlens
