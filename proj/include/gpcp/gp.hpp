#pragma once

// Ordinary-kriging posterior (zero prior mean) with MLE hyperparameter
// selection. The likelihood objective is exactly
//
//   nll(sigma2, theta) = y' K_eps^{-1} y + log det K_eps
//
// with no additive constants; the nugget is held fixed at the user-supplied
// value and only (sigma2, theta) are optimized.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gpcp/interval.hpp"
#include "gpcp/kernels.hpp"
#include "gpcp/optim.hpp"
#include "gpcp/rng.hpp"
#include "gpcp/special.hpp"

namespace gpcp {

struct MleSettings {
  std::pair<double, double> theta_bounds{1e-2, 1e2};  // standardized-input units
  // {0, 0} resolves to [1e-6, 1e3] * var(y) at fit time.
  std::pair<double, double> sigma2_bounds{0.0, 0.0};
  int n_restarts = 10;
  int max_iters = 200;
  std::uint64_t seed = 0;
  bool anisotropic = false;  // per-dimension length-scales instead of a scalar theta
  // Valid only with nugget = 0: profile sigma2 out of the objective.
  bool use_sigma2_profile = false;
  // Optional warm start consuming the first restart slot.
  std::optional<KernelSpec> warm_start;
};

inline void validate_mle_settings(const MleSettings& s) {
  const auto check_bounds = [](std::pair<double, double> b, const char* name) {
    if (!(b.first > 0.0) || !(b.second > b.first) || !std::isfinite(b.second))
      throw std::invalid_argument(std::string("MleSettings: ") + name +
                                  " must be finite, positive and ordered");
  };
  check_bounds(s.theta_bounds, "theta_bounds");
  if (s.sigma2_bounds != std::pair<double, double>{0.0, 0.0})
    check_bounds(s.sigma2_bounds, "sigma2_bounds");
  if (s.n_restarts < 1) throw std::invalid_argument("MleSettings: n_restarts must be >= 1");
  if (s.max_iters < 1) throw std::invalid_argument("MleSettings: max_iters must be >= 1");
}

struct GramFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;  // factorization aid only, never part of the model
  bool ok = false;
};

// Cholesky with an escalating jitter ladder: plain first, then
// 1e-10 * sigma2 growing tenfold up to 1e-4 * sigma2.
inline GramFactor factor_spd(const Matrix& gram, double sigma2) {
  GramFactor factor;
  factor.llt.compute(gram);
  if (factor.llt.info() == Eigen::Success) {
    factor.ok = true;
    return factor;
  }
  for (double jitter = 1e-10 * sigma2; jitter <= 1e-4 * sigma2 * (1.0 + 1e-12);
       jitter *= 10.0) {
    Matrix bumped = gram;
    bumped.diagonal().array() += jitter;
    factor.llt.compute(bumped);
    if (factor.llt.info() == Eigen::Success) {
      factor.jitter = jitter;
      factor.ok = true;
      return factor;
    }
  }
  return factor;
}

namespace detail {

inline double nll_from_factor(const GramFactor& factor, const Vector& y) {
  const Vector alpha = factor.llt.solve(y);
  const double quad = y.dot(alpha);
  const double log_det =
      2.0 * factor.llt.matrixLLT().diagonal().array().log().sum();
  const double value = quad + log_det;
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline double neg_log_likelihood(const KernelSpec& spec, const Matrix& points,
                                 const Vector& y) {
  if (points.rows() != y.size())
    throw std::invalid_argument("neg_log_likelihood: row count does not match outputs");
  const Matrix gram = gram_matrix(spec, points, /*with_nugget=*/true);
  const GramFactor factor = factor_spd(gram, spec.sigma2);
  if (!factor.ok) return std::numeric_limits<double>::infinity();
  return detail::nll_from_factor(factor, y);
}

struct FittedGP {
  KernelSpec spec;
  Matrix x_train;
  Vector y_train;
  Eigen::LLT<Matrix> chol;  // factor of the nugget-augmented Gram matrix
  Vector weights;           // K_eps^{-1} y
  double jitter = 0.0;
  double nll = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Gram assembly for one objective evaluation. Isotropic candidates reuse the
// cached pairwise distance matrix; anisotropic ones rescale per dimension.
class NllObjective {
 public:
  NllObjective(const Matrix& points, const Vector& y, double nu, double nugget,
               NuggetMode mode, bool anisotropic)
      : points_(points),
        y_(y),
        profile_(nu),
        nugget_(nugget),
        mode_(mode),
        anisotropic_(anisotropic) {
    if (!anisotropic_) distances_ = pairwise_distances(points_);
  }

  // params = [log sigma2, log theta...]
  double operator()(const Eigen::VectorXd& params) const {
    const double sigma2 = std::exp(params[0]);
    Matrix gram = correlation(params);
    gram *= sigma2;
    if (nugget_ > 0.0)
      gram.diagonal().array() +=
          mode_ == NuggetMode::kSdOnDiagonal ? nugget_ : nugget_ * nugget_;
    const GramFactor factor = factor_spd(gram, sigma2);
    if (!factor.ok) return std::numeric_limits<double>::infinity();
    return nll_from_factor(factor, y_);
  }

  // Zero-nugget profile objective over theta alone; returns the profiled
  // sigma2 through the out-parameter.
  double profiled(const Eigen::VectorXd& log_theta, double* sigma2_out) const {
    Eigen::VectorXd params(log_theta.size() + 1);
    params[0] = 0.0;  // unit variance correlation
    params.tail(log_theta.size()) = log_theta;
    const Matrix corr = correlation(params);
    const GramFactor factor = factor_spd(corr, 1.0);
    if (!factor.ok) return std::numeric_limits<double>::infinity();
    const double quad = y_.dot(factor.llt.solve(y_));
    const double n = static_cast<double>(y_.size());
    const double sigma2 = quad / n;
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      return std::numeric_limits<double>::infinity();
    if (sigma2_out) *sigma2_out = sigma2;
    const double log_det_corr =
        2.0 * factor.llt.matrixLLT().diagonal().array().log().sum();
    const double value = n + n * std::log(sigma2) + log_det_corr;
    return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
  }

 private:
  Matrix correlation(const Eigen::VectorXd& params) const {
    const Eigen::Index n = points_.rows();
    Matrix corr(n, n);
    if (!anisotropic_) {
      const double inv_theta = std::exp(-params[1]);
      for (Eigen::Index i = 0; i < n; ++i) {
        corr(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
          const double value = profile_(distances_(i, j) * inv_theta);
          corr(i, j) = value;
          corr(j, i) = value;
        }
      }
    } else {
      Eigen::VectorXd inv_theta = (-params.tail(params.size() - 1)).array().exp();
      for (Eigen::Index i = 0; i < n; ++i) {
        corr(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
          double sum = 0.0;
          for (Eigen::Index k = 0; k < points_.cols(); ++k) {
            const double d = (points_(i, k) - points_(j, k)) * inv_theta[k];
            sum += d * d;
          }
          const double value = profile_(std::sqrt(sum));
          corr(i, j) = value;
          corr(j, i) = value;
        }
      }
    }
    return corr;
  }

  const Matrix& points_;
  const Vector& y_;
  MaternProfile profile_;
  double nugget_;
  NuggetMode mode_;
  bool anisotropic_;
  Matrix distances_;
};

inline void warn_if_not_standardized(const Matrix& points) {
  const Eigen::Index n = points.rows();
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double mean = points.col(c).mean();
    const double var = (points.col(c).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd < 0.75 || sd > 1.25) {
      std::cerr << "gpcp: warning: input column " << c << " has std " << sd
                << "; inputs are expected to be standardized\n";
      return;  // one line per fit is enough
    }
  }
}

}  // namespace detail

// Condition the posterior on data with fixed hyperparameters.
inline FittedGP condition(const KernelSpec& spec, const Matrix& points, const Vector& y) {
  if (points.rows() != y.size())
    throw std::invalid_argument("condition: row count does not match outputs");
  FittedGP gp;
  gp.spec = spec;
  gp.x_train = points;
  gp.y_train = y;
  const Matrix gram = gram_matrix(spec, points, /*with_nugget=*/true);
  GramFactor factor = factor_spd(gram, spec.sigma2);
  if (!factor.ok) throw std::runtime_error("condition: factorization failed");
  gp.chol = factor.llt;
  gp.jitter = factor.jitter;
  gp.weights = gp.chol.solve(y);
  // One step of iterative refinement keeps the interpolation residual at
  // working precision even for nearly singular zero-nugget systems.
  gp.weights += gp.chol.solve(y - gram * gp.weights);
  gp.nll = detail::nll_from_factor(factor, y);
  return gp;
}

// MLE fit of (sigma2, theta) with the nugget held fixed. Multi-start
// Nelder-Mead on log-parameters with Latin-hypercube restarts; ties within
// 1e-12 go to the smaller length-scale.
inline FittedGP fit(const Matrix& points, const Vector& y, double nu, double nugget,
                    const MleSettings& settings = {},
                    NuggetMode nugget_mode = NuggetMode::kSdOnDiagonal) {
  if (points.rows() < 2) throw std::invalid_argument("fit: need at least two samples");
  if (points.rows() != y.size())
    throw std::invalid_argument("fit: row count does not match outputs");
  if (!points.allFinite() || !y.allFinite())
    throw std::invalid_argument("fit: non-finite training data");
  validate_mle_settings(settings);
  detail::warn_if_not_standardized(points);

  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();

  const double y_mean = y.mean();
  const double y_var = (y.array() - y_mean).square().sum() / n;
  std::pair<double, double> sigma2_bounds = settings.sigma2_bounds;
  if (sigma2_bounds == std::pair<double, double>{0.0, 0.0}) {
    sigma2_bounds = y_var > 0.0 ? std::pair<double, double>{1e-6 * y_var, 1e3 * y_var}
                                : std::pair<double, double>{1e-12, 1.0};
  }

  const bool profile_sigma2 = settings.use_sigma2_profile && nugget == 0.0;
  const Eigen::Index theta_dim = settings.anisotropic ? d : 1;
  const Eigen::Index param_dim = profile_sigma2 ? theta_dim : theta_dim + 1;

  Eigen::VectorXd lower(param_dim), upper(param_dim);
  Eigen::Index offset = 0;
  if (!profile_sigma2) {
    lower[0] = std::log(sigma2_bounds.first);
    upper[0] = std::log(sigma2_bounds.second);
    offset = 1;
  }
  for (Eigen::Index i = 0; i < theta_dim; ++i) {
    lower[offset + i] = std::log(settings.theta_bounds.first);
    upper[offset + i] = std::log(settings.theta_bounds.second);
  }

  const detail::NllObjective nll(points, y, nu, nugget, nugget_mode,
                                 settings.anisotropic);
  std::function<double(const Eigen::VectorXd&)> objective;
  if (profile_sigma2) {
    objective = [&nll](const Eigen::VectorXd& p) { return nll.profiled(p, nullptr); };
  } else {
    objective = [&nll](const Eigen::VectorXd& p) { return nll(p); };
  }

  rng::Engine engine(rng::derive_seed(settings.seed, 0x6d6c65ULL));
  std::vector<Eigen::VectorXd> starts =
      latin_hypercube_starts(lower, upper, settings.n_restarts, engine);
  if (settings.warm_start) {
    const KernelSpec& warm = *settings.warm_start;
    Eigen::VectorXd start(param_dim);
    Eigen::Index pos = 0;
    if (!profile_sigma2) start[pos++] = std::log(warm.sigma2);
    for (Eigen::Index i = 0; i < theta_dim; ++i)
      start[pos + i] = std::log(warm.theta[std::min<Eigen::Index>(i, warm.theta.size() - 1)]);
    starts[0] = start;
  }

  NelderMeadResult best;
  bool have_best = false;
  double best_theta_norm = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& start : starts) {
    NelderMeadResult run =
        nelder_mead(objective, start, lower, upper, settings.max_iters);
    if (!std::isfinite(run.value)) continue;
    const double theta_norm =
        run.x.tail(theta_dim).array().exp().matrix().norm();
    const bool better =
        !have_best || run.value < best.value - 1e-12 ||
        (std::fabs(run.value - best.value) <= 1e-12 && theta_norm < best_theta_norm);
    if (better) {
      best = run;
      best_theta_norm = theta_norm;
      have_best = true;
    }
  }
  if (!have_best)
    throw std::runtime_error("fit: every restart produced a non-finite objective");

  KernelSpec spec;
  spec.nu = nu;
  spec.nugget = nugget;
  spec.nugget_mode = nugget_mode;
  spec.theta = Vector::Constant(d, 0.0);
  if (profile_sigma2) {
    double sigma2 = 1.0;
    nll.profiled(best.x, &sigma2);
    spec.sigma2 = std::clamp(sigma2, sigma2_bounds.first, sigma2_bounds.second);
    for (Eigen::Index i = 0; i < d; ++i)
      spec.theta[i] = std::exp(best.x[settings.anisotropic ? i : 0]);
  } else {
    spec.sigma2 = std::exp(best.x[0]);
    for (Eigen::Index i = 0; i < d; ++i)
      spec.theta[i] = std::exp(best.x[1 + (settings.anisotropic ? i : 0)]);
  }
  return condition(spec, points, y);
}

inline Vector posterior_mean(const FittedGP& gp, const Matrix& queries) {
  if (queries.cols() != gp.x_train.cols())
    throw std::invalid_argument("posterior_mean: query dimension mismatch");
  Vector mean(queries.rows());
  for (Eigen::Index j = 0; j < queries.rows(); ++j)
    mean[j] = cross_vector(gp.spec, gp.x_train, queries.row(j)).dot(gp.weights);
  return mean;
}

inline Vector posterior_std(const FittedGP& gp, const Matrix& queries) {
  if (queries.cols() != gp.x_train.cols())
    throw std::invalid_argument("posterior_std: query dimension mismatch");
  const auto& L = gp.chol.matrixL();
  Vector std_dev(queries.rows());
  for (Eigen::Index j = 0; j < queries.rows(); ++j) {
    const Vector k = cross_vector(gp.spec, gp.x_train, queries.row(j));
    const Vector v = L.solve(k);
    const double variance = gp.spec.sigma2 - v.squaredNorm();
    std_dev[j] = std::sqrt(std::max(0.0, variance));
  }
  return std_dev;
}

// Bayesian credibility interval [mean +- u_{1-alpha/2} std].
inline IntervalSet credibility_interval(const FittedGP& gp, const Matrix& queries,
                                        double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("credibility_interval: alpha must lie in (0,1)");
  const double u = normal_quantile(1.0 - alpha / 2.0);
  const Vector mean = posterior_mean(gp, queries);
  const Vector sd = posterior_std(gp, queries);
  IntervalSet intervals;
  intervals.lower = mean - u * sd;
  intervals.upper = mean + u * sd;
  intervals.method = Method::kCredibility;
  intervals.alpha = alpha;
  intervals.kernel_nu = gp.spec.nu;
  return intervals;
}

}  // namespace gpcp
