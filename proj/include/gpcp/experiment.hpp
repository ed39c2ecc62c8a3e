#pragma once

// Experiment orchestration: resolve a JSON config into data, fit one GP per
// regularity parameter, build the LOO ensembles, construct every requested
// interval method over the (nu, beta, alpha) grid and attach the evaluation
// metrics. Branches over nu run concurrently; every random stream is derived
// from (seed, stable stream tag) so thread scheduling cannot change results.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpcp/bench.hpp"
#include "gpcp/conformal.hpp"
#include "gpcp/data_io.hpp"
#include "gpcp/gp.hpp"
#include "gpcp/loo.hpp"
#include "gpcp/metrics.hpp"
#include "gpcp/parallel.hpp"
#include "gpcp/rng.hpp"
#include "gpcp/version.hpp"

namespace gpcp {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  enum class Type { kMorokoff, kWingWeight, kCsv };
  Type type = Type::kMorokoff;
  int dimension = 10;
  int n_samples = 600;
  double noise_sd = 1e-2;
  // Optional override of the per-function default design distribution.
  std::optional<InputDistribution> inputs;
  std::string path;
  std::string target;
  char delimiter = ',';
};

struct ExperimentConfig {
  ProblemConfig problem;
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
  double nugget = 1e-4;
  NuggetMode nugget_mode = NuggetMode::kSdOnDiagonal;
  std::vector<double> nu_grid{0.5, 1.5, 2.5};
  std::vector<double> beta_grid{0.5, 1.0, 1.5};
  std::vector<double> alpha_grid{0.1, 0.05, 0.01};
  std::vector<Method> methods{Method::kCredibility, Method::kJackknifePlus,
                              Method::kJackknifeMinmax, Method::kJPlusGp,
                              Method::kJMinmaxGp};
  double delta = 1e-6;
  LooMode loo_mode = LooMode::kClosedForm;
  bool jminmax_literal_display = false;
  int n_boot = 999;
  double upsilon = 0.1;
  MleSettings mle;
  std::vector<std::string> output_formats{"json", "csv", "md"};
};

namespace detail {

inline std::string line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

template <typename T>
T config_get(const json& node, const std::string& key, const T& fallback) {
  if (!node.contains(key)) return fallback;
  try {
    return node.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

template <typename T>
T config_require(const json& node, const std::string& key) {
  if (!node.contains(key)) throw ConfigError("config field '" + key + "' is required");
  try {
    return node.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

inline InputDistribution parse_input_distributions(const json& node) {
  InputDistribution inputs;
  if (node.is_object() && node.contains("kind") &&
      node.at("kind").get<std::string>() == "mvnormal") {
    MvNormal joint;
    const auto mean = config_require<std::vector<double>>(node, "mean");
    const auto cov = config_require<std::vector<std::vector<double>>>(node, "cov");
    const auto d = static_cast<Eigen::Index>(mean.size());
    if (static_cast<Eigen::Index>(cov.size()) != d)
      throw ConfigError("input distribution: cov must be square and match mean");
    joint.mean = Eigen::Map<const Vector>(mean.data(), d);
    joint.covariance.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(cov[i].size()) != d)
        throw ConfigError("input distribution: cov must be square and match mean");
      for (Eigen::Index j = 0; j < d; ++j) joint.covariance(i, j) = cov[i][j];
    }
    inputs.joint = joint;
    return inputs;
  }
  if (!node.is_array())
    throw ConfigError("config field 'problem.input_distributions' must be a list "
                      "of marginals or one mvnormal object");
  for (const auto& marginal : node) {
    const auto kind = config_require<std::string>(marginal, "kind");
    try {
      if (kind == "uniform")
        inputs.marginals.push_back(MarginalDistribution::uniform(
            config_require<double>(marginal, "a"), config_require<double>(marginal, "b")));
      else if (kind == "normal")
        inputs.marginals.push_back(MarginalDistribution::normal(
            config_require<double>(marginal, "mu"), config_require<double>(marginal, "sd")));
      else if (kind == "triangular")
        inputs.marginals.push_back(MarginalDistribution::triangular(
            config_require<double>(marginal, "a"), config_require<double>(marginal, "b"),
            config_require<double>(marginal, "c")));
      else
        throw ConfigError("input distribution kind must be uniform, normal, "
                          "triangular or mvnormal");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("input distribution: ") + e.what());
    }
  }
  if (inputs.marginals.empty())
    throw ConfigError("config field 'problem.input_distributions' must be non-empty");
  return inputs;
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const json& root) {
  ExperimentConfig config;

  if (!root.contains("problem") || !root.at("problem").is_object())
    throw ConfigError("config field 'problem' (object) is required");
  const json& problem = root.at("problem");
  const auto type = detail::config_require<std::string>(problem, "type");
  if (type == "morokoff") {
    config.problem.type = ProblemConfig::Type::kMorokoff;
    config.problem.dimension = detail::config_get(problem, "dimension", 10);
    config.problem.n_samples = detail::config_get(problem, "n_samples", 600);
    config.problem.noise_sd = detail::config_get(problem, "noise_sd", 1e-2);
    config.train_fraction = 0.75;
    config.nugget = 1e-4;
  } else if (type == "wing_weight") {
    config.problem.type = ProblemConfig::Type::kWingWeight;
    config.problem.dimension = 10;
    config.problem.n_samples = detail::config_get(problem, "n_samples", 600);
    config.problem.noise_sd = detail::config_get(problem, "noise_sd", 5.0);
    config.train_fraction = 0.75;
    config.nugget = 0.1;
  } else if (type == "csv") {
    config.problem.type = ProblemConfig::Type::kCsv;
    config.problem.path = detail::config_require<std::string>(problem, "path");
    config.problem.target = detail::config_require<std::string>(problem, "target");
    const auto delim = detail::config_get<std::string>(problem, "delimiter", ",");
    if (delim.size() != 1) throw ConfigError("config field 'problem.delimiter' must be one character");
    config.problem.delimiter = delim[0];
    config.train_fraction = 0.8;
    config.nugget = 0.1;
  } else {
    throw ConfigError("config field 'problem.type' must be morokoff, wing_weight or csv");
  }
  if (problem.contains("input_distributions")) {
    if (config.problem.type == ProblemConfig::Type::kCsv)
      throw ConfigError("config field 'problem.input_distributions' does not apply to csv");
    config.problem.inputs =
        detail::parse_input_distributions(problem.at("input_distributions"));
    const auto d = config.problem.inputs->dimension();
    if (config.problem.type == ProblemConfig::Type::kWingWeight && d != 10)
      throw ConfigError("wing_weight needs 10 input distributions");
    if (config.problem.type == ProblemConfig::Type::kMorokoff)
      config.problem.dimension = static_cast<int>(d);
  }

  config.train_fraction = detail::config_get(root, "train_fraction", config.train_fraction);
  config.seed = detail::config_get<std::uint64_t>(root, "seed", 0);
  config.nugget = detail::config_get(root, "nugget", config.nugget);
  const auto nugget_mode =
      detail::config_get<std::string>(root, "nugget_mode", "sd_on_diagonal");
  if (nugget_mode == "sd_on_diagonal")
    config.nugget_mode = NuggetMode::kSdOnDiagonal;
  else if (nugget_mode == "variance_on_diagonal")
    config.nugget_mode = NuggetMode::kVarianceOnDiagonal;
  else
    throw ConfigError("config field 'nugget_mode' must be sd_on_diagonal or variance_on_diagonal");

  config.nu_grid = detail::config_get(root, "nu_grid", config.nu_grid);
  config.beta_grid = detail::config_get(root, "beta_grid", config.beta_grid);
  config.alpha_grid = detail::config_get(root, "alpha_grid", config.alpha_grid);
  if (root.contains("methods")) {
    config.methods.clear();
    for (const auto& name : detail::config_require<std::vector<std::string>>(root, "methods")) {
      try {
        config.methods.push_back(method_from_name(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'methods': ") + e.what());
      }
    }
  }
  config.delta = detail::config_get(root, "delta", 1e-6);
  const auto loo_mode = detail::config_get<std::string>(root, "loo_mode", "closed_form");
  try {
    config.loo_mode = loo_mode_from_name(loo_mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config field 'loo_mode': ") + e.what());
  }
  config.jminmax_literal_display =
      detail::config_get(root, "jminmax_literal_display", false);
  config.n_boot = detail::config_get(root, "n_boot", 999);
  config.upsilon = detail::config_get(root, "upsilon", 0.1);

  if (root.contains("mle")) {
    const json& mle = root.at("mle");
    config.mle.n_restarts = detail::config_get(mle, "n_restarts", config.mle.n_restarts);
    config.mle.max_iters = detail::config_get(mle, "max_iters", config.mle.max_iters);
    if (mle.contains("theta_bounds")) {
      const auto b = detail::config_require<std::vector<double>>(mle, "theta_bounds");
      if (b.size() != 2) throw ConfigError("config field 'mle.theta_bounds' must have 2 entries");
      config.mle.theta_bounds = {b[0], b[1]};
    }
    if (mle.contains("sigma2_bounds") && !mle.at("sigma2_bounds").is_null()) {
      const auto b = detail::config_require<std::vector<double>>(mle, "sigma2_bounds");
      if (b.size() != 2) throw ConfigError("config field 'mle.sigma2_bounds' must have 2 entries");
      config.mle.sigma2_bounds = {b[0], b[1]};
    }
    config.mle.anisotropic = detail::config_get(mle, "anisotropic", false);
  }
  config.output_formats =
      detail::config_get(root, "output_formats", config.output_formats);

  // Validation.
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    throw ConfigError("config field 'train_fraction' must lie in (0,1)");
  if (!(config.nugget >= 0.0)) throw ConfigError("config field 'nugget' must be >= 0");
  if (config.nu_grid.empty()) throw ConfigError("config field 'nu_grid' must be non-empty");
  for (double nu : config.nu_grid)
    if (!is_half_integer_regularity(nu))
      throw ConfigError("config field 'nu_grid' entries must be positive half-integers");
  if (config.beta_grid.empty()) throw ConfigError("config field 'beta_grid' must be non-empty");
  for (double beta : config.beta_grid)
    if (!(beta > 0.0)) throw ConfigError("config field 'beta_grid' entries must be positive");
  if (config.alpha_grid.empty()) throw ConfigError("config field 'alpha_grid' must be non-empty");
  for (double alpha : config.alpha_grid)
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("config field 'alpha_grid' entries must lie in (0,1)");
  if (config.methods.empty()) throw ConfigError("config field 'methods' must be non-empty");
  if (!(config.delta > 0.0)) throw ConfigError("config field 'delta' must be positive");
  if (config.n_boot < 1) throw ConfigError("config field 'n_boot' must be >= 1");
  if (!(config.upsilon > 0.0 && config.upsilon < 1.0))
    throw ConfigError("config field 'upsilon' must lie in (0,1)");
  try {
    validate_mle_settings(config.mle);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config field 'mle': ") + e.what());
  }
  return config;
}

// Parse from raw text so syntax errors can cite line and column.
inline ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON (" +
                      detail::line_of_byte(text, e.byte > 0 ? e.byte - 1 : 0) +
                      "): " + e.what());
  }
  return parse_config_json(root);
}

inline json config_to_json(const ExperimentConfig& config) {
  json problem;
  switch (config.problem.type) {
    case ProblemConfig::Type::kMorokoff:
      problem["type"] = "morokoff";
      problem["dimension"] = config.problem.dimension;
      problem["n_samples"] = config.problem.n_samples;
      problem["noise_sd"] = config.problem.noise_sd;
      break;
    case ProblemConfig::Type::kWingWeight:
      problem["type"] = "wing_weight";
      problem["n_samples"] = config.problem.n_samples;
      problem["noise_sd"] = config.problem.noise_sd;
      break;
    case ProblemConfig::Type::kCsv:
      problem["type"] = "csv";
      problem["path"] = config.problem.path;
      problem["target"] = config.problem.target;
      problem["delimiter"] = std::string(1, config.problem.delimiter);
      break;
  }
  json mle;
  mle["n_restarts"] = config.mle.n_restarts;
  mle["max_iters"] = config.mle.max_iters;
  mle["theta_bounds"] = {config.mle.theta_bounds.first, config.mle.theta_bounds.second};
  if (config.mle.sigma2_bounds == std::pair<double, double>{0.0, 0.0})
    mle["sigma2_bounds"] = nullptr;
  else
    mle["sigma2_bounds"] = {config.mle.sigma2_bounds.first, config.mle.sigma2_bounds.second};
  mle["anisotropic"] = config.mle.anisotropic;

  std::vector<std::string> method_names;
  for (Method m : config.methods) method_names.emplace_back(method_name(m));

  json root;
  root["problem"] = problem;
  root["train_fraction"] = config.train_fraction;
  root["seed"] = config.seed;
  root["nugget"] = config.nugget;
  root["nugget_mode"] = config.nugget_mode == NuggetMode::kSdOnDiagonal
                            ? "sd_on_diagonal"
                            : "variance_on_diagonal";
  root["nu_grid"] = config.nu_grid;
  root["beta_grid"] = config.beta_grid;
  root["alpha_grid"] = config.alpha_grid;
  root["methods"] = method_names;
  root["delta"] = config.delta;
  root["loo_mode"] = loo_mode_name(config.loo_mode);
  root["jminmax_literal_display"] = config.jminmax_literal_display;
  root["n_boot"] = config.n_boot;
  root["upsilon"] = config.upsilon;
  root["mle"] = mle;
  root["output_formats"] = config.output_formats;
  return root;
}

struct GpModelSummary {
  double nu = 0.0;
  bool failed = false;
  std::string error;
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> theta;
  double nll = std::numeric_limits<double>::quiet_NaN();
  double jitter = 0.0;
  double q2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
};

struct SelectionSummary {
  double alpha = 0.0;
  double threshold = 0.0;
  Selection selection;
};

struct EvalReport {
  json config_echo;
  std::string library_version;
  std::string rng_id;
  std::string timestamp;
  std::string dataset_name;
  std::string standardization;
  int n_train = 0;
  int n_test = 0;
  int rows_dropped = 0;
  std::uint64_t source_digest = 0;
  std::vector<GpModelSummary> models;
  std::vector<EvalRecord> records;
  std::vector<SelectionSummary> selections;

  bool all_branches_failed() const {
    for (const auto& model : models)
      if (!model.failed) return false;
    return !models.empty();
  }
};

namespace detail {

// Stream tags for derived seeds.
inline constexpr std::uint64_t kDoeStream = 0x10;
inline constexpr std::uint64_t kSplitStream = 0x20;
inline constexpr std::uint64_t kMleStream = 0x30;
inline constexpr std::uint64_t kBootStream = 0x40;

struct ResolvedData {
  Matrix x_train, x_test;
  Vector y_train, y_test;
  std::string name;
  std::string standardization;
  int rows_dropped = 0;
  std::uint64_t digest = 0;
};

inline ResolvedData resolve_problem(const ExperimentConfig& config) {
  ResolvedData data;
  if (config.problem.type == ProblemConfig::Type::kCsv) {
    const TabularDataset dataset =
        load_csv(config.problem.path, config.problem.target, MissingPolicy::kDropRow,
                 config.problem.delimiter);
    const SplitIndices idx = split_indices(
        dataset.size(), config.train_fraction, rng::derive_seed(config.seed, kSplitStream));
    const auto gather = [&](const std::vector<Eigen::Index>& rows, Matrix* x, Vector* y) {
      x->resize(static_cast<Eigen::Index>(rows.size()), dataset.x.cols());
      y->resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        x->row(static_cast<Eigen::Index>(i)) = dataset.x.row(rows[i]);
        (*y)[static_cast<Eigen::Index>(i)] = dataset.y[rows[i]];
      }
    };
    Matrix x_train_raw, x_test_raw;
    gather(idx.train, &x_train_raw, &data.y_train);
    gather(idx.test, &x_test_raw, &data.y_test);
    const StandardizeTransform transform = standardize_empirical(x_train_raw);
    data.x_train = transform.apply(x_train_raw);
    data.x_test = transform.apply(x_test_raw);
    data.name = dataset.name;
    data.standardization = "empirical";
    data.rows_dropped = dataset.rows_dropped;
    data.digest = dataset.source_digest;
    return data;
  }

  SyntheticProblem problem;
  problem.function = config.problem.type == ProblemConfig::Type::kWingWeight
                         ? BenchFunction::kWingWeight
                         : BenchFunction::kMorokoffCaflisch;
  problem.dimension = config.problem.dimension;
  problem.noise_sd = config.problem.noise_sd;
  problem.n_samples = config.problem.n_samples;
  problem.seed = rng::derive_seed(config.seed, kDoeStream);
  problem.inputs = problem.function == BenchFunction::kWingWeight
                       ? wing_weight_default_inputs()
                       : morokoff_default_inputs(problem.dimension);
  const Doe doe = sample_doe(problem);

  const SplitIndices idx =
      split_indices(doe.x.rows(), config.train_fraction,
                    rng::derive_seed(config.seed, kSplitStream));
  const StandardizeTransform transform = standardize_from_moments(problem.inputs);
  const Matrix x_std = transform.apply(doe.x);
  data.x_train.resize(static_cast<Eigen::Index>(idx.train.size()), x_std.cols());
  data.y_train.resize(static_cast<Eigen::Index>(idx.train.size()));
  for (std::size_t i = 0; i < idx.train.size(); ++i) {
    data.x_train.row(static_cast<Eigen::Index>(i)) = x_std.row(idx.train[i]);
    data.y_train[static_cast<Eigen::Index>(i)] = doe.y[idx.train[i]];
  }
  data.x_test.resize(static_cast<Eigen::Index>(idx.test.size()), x_std.cols());
  data.y_test.resize(static_cast<Eigen::Index>(idx.test.size()));
  for (std::size_t i = 0; i < idx.test.size(); ++i) {
    data.x_test.row(static_cast<Eigen::Index>(i)) = x_std.row(idx.test[i]);
    data.y_test[static_cast<Eigen::Index>(i)] = doe.y[idx.test[i]];
  }
  data.name = problem.function == BenchFunction::kWingWeight ? "wing_weight" : "morokoff";
  data.standardization = "known_moments";
  return data;
}

struct BranchResult {
  GpModelSummary model;
  std::vector<EvalRecord> records;
};

inline bool needs_loo(const std::vector<Method>& methods) {
  for (Method m : methods)
    if (m != Method::kCredibility) return true;
  return false;
}

inline bool is_gp_weighted(Method m) {
  return m == Method::kJPlusGp || m == Method::kJMinmaxGp;
}

}  // namespace detail

inline std::string utc_timestamp();

inline EvalReport run_experiment(const ExperimentConfig& config, unsigned threads = 0) {
  const detail::ResolvedData data = detail::resolve_problem(config);
  const auto n_train = static_cast<int>(data.y_train.size());
  const auto n_test = static_cast<int>(data.y_test.size());

  EvalReport report;
  report.config_echo = config_to_json(config);
  report.library_version = kLibraryVersion;
  report.rng_id = rng::kAlgorithmId;
  report.timestamp = utc_timestamp();
  report.dataset_name = data.name;
  report.standardization = data.standardization;
  report.n_train = n_train;
  report.n_test = n_test;
  report.rows_dropped = data.rows_dropped;
  report.source_digest = data.digest;

  std::map<double, double> thresholds;
  for (double alpha : config.alpha_grid)
    thresholds[alpha] = beta_soft_threshold(n_train, alpha, config.upsilon);

  const std::size_t n_branches = config.nu_grid.size();
  std::vector<detail::BranchResult> branches(n_branches);

  parallel_for(n_branches, threads, [&](std::size_t b) {
    detail::BranchResult& branch = branches[b];
    const double nu = config.nu_grid[b];
    branch.model.nu = nu;
    try {
      MleSettings settings = config.mle;
      settings.seed = rng::derive_seed(config.seed, detail::kMleStream + b);
      const FittedGP gp =
          fit(data.x_train, data.y_train, nu, config.nugget, settings, config.nugget_mode);
      branch.model.sigma2 = gp.spec.sigma2;
      branch.model.theta.assign(gp.spec.theta.begin(), gp.spec.theta.end());
      branch.model.nll = gp.nll;
      branch.model.jitter = gp.jitter;

      const Vector mean_test = posterior_mean(gp, data.x_test);
      branch.model.q2 = predictivity_q2(data.y_test, mean_test);
      branch.model.mse = mean_squared_error(data.y_test, mean_test);
      const Vector abs_errors = (data.y_test - mean_test).cwiseAbs();

      std::optional<LooCore> core;
      if (detail::needs_loo(config.methods))
        core = build_loo_core(gp, data.x_test, config.loo_mode, settings, 1);

      // Non-GP-weighted scores are beta-free; build one ensemble for them.
      std::optional<LooEnsemble> plain_ensemble;
      if (core) plain_ensemble = score_ensemble(*core, data.y_train, 1.0, config.delta);

      const auto push_record = [&](const IntervalSet& intervals_in, Method method,
                                   std::optional<double> beta, std::size_t beta_index) {
        IntervalSet intervals = intervals_in;
        intervals.kernel_nu = nu;
        EvalRecord record;
        record.method = method;
        record.nu = nu;
        record.beta_power = beta;
        record.alpha = intervals.alpha;
        record.coverage = empirical_coverage(intervals, data.y_test);
        const auto [avg, infinite] = average_width(intervals);
        record.avg_width = avg;
        record.width_infinite_count = infinite;
        record.q2 = branch.model.q2;
        record.mse = branch.model.mse;
        record.passes_soft_threshold = record.coverage >= thresholds.at(intervals.alpha);
        // The bootstrap stream ignores alpha on purpose: methods whose
        // widths only shift with alpha then report the same correlation at
        // every level.
        const std::uint64_t boot_seed = rng::derive_seed(
            rng::derive_seed(config.seed, detail::kBootStream + b),
            static_cast<std::uint64_t>(method) * 64 + beta_index);
        if (n_test >= 3) {
          try {
            const BootstrapSummary boot =
                bootstrap_spearman(intervals, abs_errors, config.n_boot, boot_seed);
            record.spearman_median = boot.median;
            record.spearman_ci = {boot.lower, boot.upper};
            record.spearman_samples = boot.samples;
            record.spearman_degenerate_count = boot.degenerate_count;
          } catch (const std::runtime_error&) {
            record.spearman_degenerate_count = config.n_boot;
          }
        }
        branch.records.push_back(std::move(record));
      };

      for (Method method : config.methods) {
        if (method == Method::kCredibility) {
          for (double alpha : config.alpha_grid)
            push_record(credibility_interval(gp, data.x_test, alpha), method,
                        std::nullopt, 0);
        } else if (method == Method::kJackknife) {
          for (double alpha : config.alpha_grid)
            push_record(jackknife(mean_test, *plain_ensemble, alpha), method,
                        std::nullopt, 0);
        } else if (method == Method::kJackknifePlus) {
          for (double alpha : config.alpha_grid)
            push_record(jackknife_plus(*plain_ensemble, alpha), method, std::nullopt, 0);
        } else if (method == Method::kJackknifeMinmax) {
          for (double alpha : config.alpha_grid)
            push_record(jackknife_minmax(*plain_ensemble, alpha), method, std::nullopt, 0);
        } else {
          for (std::size_t bi = 0; bi < config.beta_grid.size(); ++bi) {
            const double beta = config.beta_grid[bi];
            const LooEnsemble ensemble =
                score_ensemble(*core, data.y_train, beta, config.delta);
            for (double alpha : config.alpha_grid) {
              if (method == Method::kJPlusGp)
                push_record(jplus_gp(ensemble, alpha), method, beta, bi);
              else
                push_record(jminmax_gp(ensemble, alpha, config.jminmax_literal_display),
                            method, beta, bi);
            }
          }
        }
      }
    } catch (const std::exception& e) {
      branch.model.failed = true;
      branch.model.error = e.what();
      branch.records.clear();
    }
  });

  // Assemble in canonical (method, nu, beta, alpha) order.
  for (const auto& branch : branches) report.models.push_back(branch.model);
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi)
    for (std::size_t b = 0; b < n_branches; ++b)
      for (const EvalRecord& record : branches[b].records)
        if (record.method == config.methods[mi]) report.records.push_back(record);

  for (double alpha : config.alpha_grid) {
    SelectionSummary summary;
    summary.alpha = alpha;
    summary.threshold = thresholds.at(alpha);
    summary.selection = select_best(report.records, alpha);
    report.selections.push_back(summary);
  }
  return report;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

}  // namespace gpcp
