#pragma once

// Leave-one-out posteriors: residuals at the held-out points, Gaussian
// non-conformity scores, and per-fold means/stds at the test points.
//
// Closed-form mode derives every fold from the single full factorization.
// With A = K_eps^{-1}, w = A y and B_i = A - A e_i e_i' A / A_ii (which has a
// zero i-th row and column and equals the inverse of the retained Gram):
//
//   g_{-i}(X_i)      = y_i - w_i / A_ii
//   var_{-i}(X_i)    = 1 / A_ii - diagonal nugget
//   g_{-i}(x)        = k(x)' w   -  v_i w_i / A_ii,      v = A k(x)
//   var_{-i}(x)      = sigma2 - k(x)' v + v_i^2 / A_ii
//
// The retrain modes rebuild each fold from scratch and double as the oracle
// the closed form is tested against.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "gpcp/gp.hpp"
#include "gpcp/kernels.hpp"
#include "gpcp/parallel.hpp"
#include "gpcp/rng.hpp"

namespace gpcp {

enum class LooMode { kClosedForm, kRetrainFixedHyper, kRetrainFull };

inline const char* loo_mode_name(LooMode mode) {
  switch (mode) {
    case LooMode::kClosedForm: return "closed_form";
    case LooMode::kRetrainFixedHyper: return "retrain_fixed_hyper";
    case LooMode::kRetrainFull: return "retrain_full";
  }
  return "unknown";
}

inline LooMode loo_mode_from_name(const std::string& name) {
  for (LooMode m : {LooMode::kClosedForm, LooMode::kRetrainFixedHyper,
                    LooMode::kRetrainFull})
    if (name == loo_mode_name(m)) return m;
  throw std::invalid_argument("unknown loo mode: " + name);
}

// Beta-independent part of the ensemble: fold posteriors evaluated at their
// own held-out point and at every test point.
struct LooCore {
  Vector loo_mean_at_train;  // g_{-i}(X_i)
  Vector loo_std_at_train;   // gamma_{-i}(X_i)
  Matrix loo_mean_at_test;   // n x m
  Matrix loo_std_at_test;    // n x m
  LooMode mode = LooMode::kClosedForm;
};

struct LooEnsemble {
  Vector loo_residual;       // R_i = |y_i - g_{-i}(X_i)|
  Vector loo_score_gamma;    // R_i / max(delta, gamma_{-i}(X_i)^beta)
  Vector loo_std_at_train;
  Matrix loo_mean_at_test;
  Matrix loo_std_at_test;
  double beta_power = 1.0;
  double delta = 1e-6;
  LooMode mode = LooMode::kClosedForm;

  Eigen::Index fold_count() const { return loo_residual.size(); }
  Eigen::Index test_count() const { return loo_mean_at_test.cols(); }
};

namespace detail {

inline LooCore closed_form_core(const FittedGP& gp, const Matrix& x_test) {
  const Eigen::Index n = gp.x_train.rows();
  const Eigen::Index m = x_test.rows();
  // The factored matrix carries the nugget plus any factorization jitter;
  // both must come off the raw 1/A_ii before it is a posterior variance.
  const double diag_add =
      (gp.spec.nugget > 0.0 ? gp.spec.diagonal_nugget() : 0.0) + gp.jitter;

  const Matrix inverse = gp.chol.solve(Matrix::Identity(n, n));
  const Vector inv_diag = inverse.diagonal();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(inv_diag[i] > 0.0))
      throw std::runtime_error("loo: closed form needs positive inverse diagonal");

  LooCore core;
  core.mode = LooMode::kClosedForm;
  core.loo_mean_at_train =
      gp.y_train - (gp.weights.array() / inv_diag.array()).matrix();
  core.loo_std_at_train =
      (inv_diag.array().inverse() - diag_add).max(0.0).sqrt();

  core.loo_mean_at_test.resize(n, m);
  core.loo_std_at_test.resize(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Vector k = cross_vector(gp.spec, gp.x_train, x_test.row(j));
    const Vector v = inverse * k;
    const double full_mean = k.dot(gp.weights);
    const double explained = k.dot(v);
    for (Eigen::Index i = 0; i < n; ++i) {
      core.loo_mean_at_test(i, j) =
          full_mean - v[i] * gp.weights[i] / inv_diag[i];
      const double variance =
          gp.spec.sigma2 - explained + v[i] * v[i] / inv_diag[i];
      core.loo_std_at_test(i, j) = std::sqrt(std::max(0.0, variance));
    }
  }
  return core;
}

inline LooCore retrain_core(const FittedGP& gp, const Matrix& x_test, LooMode mode,
                            const MleSettings& refit_settings, unsigned threads) {
  const Eigen::Index n = gp.x_train.rows();
  const Eigen::Index m = x_test.rows();
  const Eigen::Index d = gp.x_train.cols();

  LooCore core;
  core.mode = mode;
  core.loo_mean_at_train.resize(n);
  core.loo_std_at_train.resize(n);
  core.loo_mean_at_test.resize(n, m);
  core.loo_std_at_test.resize(n, m);

  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t fold) {
    const Eigen::Index i = static_cast<Eigen::Index>(fold);
    Matrix x_rest(n - 1, d);
    Vector y_rest(n - 1);
    Eigen::Index row = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == i) continue;
      x_rest.row(row) = gp.x_train.row(r);
      y_rest[row] = gp.y_train[r];
      ++row;
    }

    FittedGP fold_gp;
    if (mode == LooMode::kRetrainFull) {
      MleSettings fold_settings = refit_settings;
      fold_settings.seed = rng::derive_seed(refit_settings.seed, fold + 1);
      fold_gp = fit(x_rest, y_rest, gp.spec.nu, gp.spec.nugget, fold_settings,
                    gp.spec.nugget_mode);
    } else {
      fold_gp.spec = gp.spec;
      fold_gp.x_train = x_rest;
      fold_gp.y_train = y_rest;
      const Matrix gram = gram_matrix(fold_gp.spec, x_rest, /*with_nugget=*/true);
      GramFactor factor = factor_spd(gram, fold_gp.spec.sigma2);
      if (!factor.ok)
        throw std::runtime_error("loo: fold factorization failed irrecoverably");
      fold_gp.chol = factor.llt;
      fold_gp.weights = fold_gp.chol.solve(y_rest);
      fold_gp.weights += fold_gp.chol.solve(y_rest - gram * fold_gp.weights);
    }

    Matrix own(1, d);
    own.row(0) = gp.x_train.row(i);
    core.loo_mean_at_train[i] = posterior_mean(fold_gp, own)[0];
    core.loo_std_at_train[i] = posterior_std(fold_gp, own)[0];
    if (m > 0) {
      core.loo_mean_at_test.row(i) = posterior_mean(fold_gp, x_test).transpose();
      core.loo_std_at_test.row(i) = posterior_std(fold_gp, x_test).transpose();
    }
  });
  return core;
}

}  // namespace detail

inline LooCore build_loo_core(const FittedGP& gp, const Matrix& x_test, LooMode mode,
                              const MleSettings& refit_settings = {},
                              unsigned threads = 1) {
  if (gp.x_train.rows() < 2)
    throw std::invalid_argument("build_loo_core: need at least two training points");
  if (x_test.rows() > 0 && x_test.cols() != gp.x_train.cols())
    throw std::invalid_argument("build_loo_core: test dimension mismatch");
  if (mode == LooMode::kClosedForm) return detail::closed_form_core(gp, x_test);
  return detail::retrain_core(gp, x_test, mode, refit_settings, threads);
}

// Attach the beta-dependent non-conformity scores to a core.
inline LooEnsemble score_ensemble(const LooCore& core, const Vector& y_train,
                                  double beta, double delta) {
  if (!(beta > 0.0)) throw std::invalid_argument("score_ensemble: beta must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("score_ensemble: delta must be positive");
  if (y_train.size() != core.loo_mean_at_train.size())
    throw std::invalid_argument("score_ensemble: output length mismatch");

  LooEnsemble ensemble;
  ensemble.loo_residual = (y_train - core.loo_mean_at_train).cwiseAbs();
  ensemble.loo_score_gamma.resize(y_train.size());
  for (Eigen::Index i = 0; i < y_train.size(); ++i) {
    const double weight =
        std::max(delta, std::pow(core.loo_std_at_train[i], beta));
    ensemble.loo_score_gamma[i] = ensemble.loo_residual[i] / weight;
  }
  ensemble.loo_std_at_train = core.loo_std_at_train;
  ensemble.loo_mean_at_test = core.loo_mean_at_test;
  ensemble.loo_std_at_test = core.loo_std_at_test;
  ensemble.beta_power = beta;
  ensemble.delta = delta;
  ensemble.mode = core.mode;

  if (!ensemble.loo_residual.allFinite() || !ensemble.loo_score_gamma.allFinite())
    throw std::runtime_error("score_ensemble: non-finite residual or score");
  return ensemble;
}

// One-call construction: full fit, fold posteriors, scores.
inline LooEnsemble build_loo_ensemble(const Matrix& points, const Vector& y, double nu,
                                      double nugget, const MleSettings& settings,
                                      const Matrix& x_test, double beta, double delta,
                                      LooMode mode = LooMode::kClosedForm,
                                      NuggetMode nugget_mode = NuggetMode::kSdOnDiagonal,
                                      unsigned threads = 1) {
  const FittedGP gp = fit(points, y, nu, nugget, settings, nugget_mode);
  const LooCore core = build_loo_core(gp, x_test, mode, settings, threads);
  return score_ensemble(core, y, beta, delta);
}

// Accessor for the interval constructors; stds are already floored at zero.
inline std::pair<const Matrix*, const Matrix*> loo_prediction_grid(
    const LooEnsemble& ensemble) {
  return {&ensemble.loo_mean_at_test, &ensemble.loo_std_at_test};
}

}  // namespace gpcp
