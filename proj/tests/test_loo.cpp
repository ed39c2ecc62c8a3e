#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "gpcp/conformal.hpp"
#include "gpcp/loo.hpp"
#include "support.hpp"

using Catch::Approx;
using gpcp::KernelSpec;
using gpcp::Matrix;
using gpcp::Vector;

namespace {

KernelSpec make_spec(double nu, double sigma2, double theta, double nugget = 0.0) {
  KernelSpec spec;
  spec.nu = nu;
  spec.sigma2 = sigma2;
  spec.theta = Vector::Constant(1, theta);
  spec.nugget = nugget;
  return spec;
}

}  // namespace

TEST_CASE("symmetric two-point configuration gives equal residuals") {
  const KernelSpec spec = make_spec(1.5, 1.0, 0.7);
  Matrix x(2, 1);
  x << -0.5, 0.5;
  Vector y(2);
  y << 1.2, 1.2;
  const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
  const gpcp::LooCore core =
      gpcp::build_loo_core(gp, Matrix(0, 1), gpcp::LooMode::kClosedForm);
  const gpcp::LooEnsemble ensemble = gpcp::score_ensemble(core, y, 1.0, 1e-6);
  REQUIRE(ensemble.loo_residual[0] == Approx(ensemble.loo_residual[1]).epsilon(1e-12));
  REQUIRE(ensemble.loo_mean_at_test.cols() == 0);
}

TEST_CASE("score definition when the delta floor is not binding") {
  gpcp::rng::Engine engine(71);
  const KernelSpec spec = make_spec(1.5, 1.0, 0.5);
  const Matrix x = gpcp_test::random_points(engine, 8, 1);
  const Vector y = gpcp_test::sample_gp_prior(spec, x, 0.0, engine);
  const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
  const gpcp::LooCore core =
      gpcp::build_loo_core(gp, Matrix(0, 1), gpcp::LooMode::kClosedForm);
  const double beta = 1.5;
  const gpcp::LooEnsemble ensemble = gpcp::score_ensemble(core, y, beta, 1e-6);
  for (int i = 0; i < 8; ++i) {
    const double s = core.loo_std_at_train[i];
    REQUIRE(s > 1e-6);  // held-out point of an interpolating fit has positive std
    REQUIRE(ensemble.loo_score_gamma[i] ==
            Approx(ensemble.loo_residual[i] / std::pow(s, beta)).epsilon(1e-12));
  }
}

TEST_CASE("closed form matches the per-fold refit oracle") {
  gpcp::rng::Engine engine(101);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 5 + static_cast<int>(engine.uniform_index(20));
    const int d = 1 + static_cast<int>(engine.uniform_index(3));
    KernelSpec spec;
    spec.nu = (trial % 3 == 0) ? 0.5 : (trial % 3 == 1) ? 1.5 : 2.5;
    spec.sigma2 = 0.5 + engine.uniform01();
    spec.theta = Vector::Constant(d, 0.4 + 0.6 * engine.uniform01());
    spec.nugget = 1e-3 * std::pow(10.0, 2.0 * engine.uniform01());  // 1e-3..1e-1
    if (trial % 4 == 0) spec.nugget_mode = gpcp::NuggetMode::kVarianceOnDiagonal;
    const Matrix x = gpcp_test::random_points(engine, n, d);
    const Vector y = gpcp_test::random_vector(engine, n);
    const Matrix x_test = gpcp_test::random_points(engine, 5, d);

    const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
    const gpcp::LooCore closed =
        gpcp::build_loo_core(gp, x_test, gpcp::LooMode::kClosedForm);
    const gpcp::LooCore refit =
        gpcp::build_loo_core(gp, x_test, gpcp::LooMode::kRetrainFixedHyper);

    REQUIRE((closed.loo_mean_at_train - refit.loo_mean_at_train).cwiseAbs().maxCoeff() <
            1e-8);
    REQUIRE((closed.loo_std_at_train - refit.loo_std_at_train).cwiseAbs().maxCoeff() <
            1e-8);
    REQUIRE((closed.loo_mean_at_test - refit.loo_mean_at_test).cwiseAbs().maxCoeff() <
            1e-8);
    REQUIRE((closed.loo_std_at_test - refit.loo_std_at_test).cwiseAbs().maxCoeff() <
            1e-8);
  }
}

TEST_CASE("permuting training pairs permutes the residuals identically") {
  gpcp::rng::Engine engine(131);
  const int n = 9;
  KernelSpec spec = make_spec(1.5, 1.3, 0.6, 0.02);
  spec.theta = Vector::Constant(2, 0.6);
  const Matrix x = gpcp_test::random_points(engine, n, 2);
  const Vector y = gpcp_test::random_vector(engine, n);
  Matrix x2(n, 2);
  Vector y2(n);
  const std::vector<int> perm{4, 2, 8, 0, 7, 1, 6, 3, 5};
  for (int i = 0; i < n; ++i) {
    x2.row(i) = x.row(perm[i]);
    y2[i] = y[perm[i]];
  }
  const gpcp::LooEnsemble a = gpcp::score_ensemble(
      gpcp::build_loo_core(gpcp::condition(spec, x, y), Matrix(0, 2),
                           gpcp::LooMode::kClosedForm),
      y, 1.0, 1e-6);
  const gpcp::LooEnsemble b = gpcp::score_ensemble(
      gpcp::build_loo_core(gpcp::condition(spec, x2, y2), Matrix(0, 2),
                           gpcp::LooMode::kClosedForm),
      y2, 1.0, 1e-6);
  for (int i = 0; i < n; ++i)
    REQUIRE(b.loo_residual[i] == Approx(a.loo_residual[perm[i]]).margin(1e-10));
}

TEST_CASE("beta -> 0 limit reduces J+GP to Jackknife+") {
  gpcp::rng::Engine engine(151);
  const KernelSpec spec = make_spec(1.5, 1.0, 0.5, 0.05);
  const Matrix x = gpcp_test::random_points(engine, 15, 1);
  const Vector y = gpcp_test::random_vector(engine, 15);
  const Matrix x_test = gpcp_test::random_points(engine, 8, 1);
  const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
  const gpcp::LooCore core = gpcp::build_loo_core(gp, x_test, gpcp::LooMode::kClosedForm);

  const gpcp::LooEnsemble plain = gpcp::score_ensemble(core, y, 1.0, 1e-6);
  const gpcp::LooEnsemble beta0 = gpcp::score_ensemble(core, y, 1e-9, 1e-6);
  const gpcp::IntervalSet jp = gpcp::jackknife_plus(plain, 0.1);
  const gpcp::IntervalSet jgp = gpcp::jplus_gp(beta0, 0.1);
  for (int j = 0; j < 8; ++j) {
    REQUIRE(std::fabs(jgp.lower[j] - jp.lower[j]) < 1e-6);
    REQUIRE(std::fabs(jgp.upper[j] - jp.upper[j]) < 1e-6);
  }
}

TEST_CASE("fixed-hyper folds interpolate their own retained points") {
  gpcp::rng::Engine engine(163);
  const KernelSpec spec = make_spec(2.5, 1.0, 0.8);
  const Matrix x = gpcp_test::random_points(engine, 7, 1);
  const Vector y = gpcp_test::sample_gp_prior(spec, x, 0.0, engine);
  const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
  // Use the retained point X_k as a test point: fold i != k must reproduce
  // y_k with zero std; fold k sees it as the deleted point.
  const gpcp::LooCore core =
      gpcp::build_loo_core(gp, x, gpcp::LooMode::kRetrainFixedHyper);
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 7; ++k) {
      if (i == k) continue;
      REQUIRE(core.loo_mean_at_test(i, k) == Approx(y[k]).margin(1e-6));
      REQUIRE(core.loo_std_at_test(i, k) <= 1e-6);
    }
  // deleted-point column: positive predictive std
  for (int i = 0; i < 7; ++i) REQUIRE(core.loo_std_at_test(i, i) > 1e-6);
}

TEST_CASE("two-point fold grid: deleted vs retained test point") {
  const KernelSpec spec = make_spec(0.5, 1.0, 1.0);
  Matrix x(2, 1);
  x << 0.0, 1.0;
  Vector y(2);
  y << 0.4, -0.9;
  const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
  Matrix x_test(1, 1);
  x_test << 1.0;  // retained for fold 0, deleted for fold 1
  const gpcp::LooCore core =
      gpcp::build_loo_core(gp, x_test, gpcp::LooMode::kClosedForm);
  REQUIRE(core.loo_mean_at_test(0, 0) == Approx(y[1]).margin(1e-10));
  REQUIRE(core.loo_std_at_test(0, 0) <= 1e-7);
  REQUIRE(core.loo_std_at_test(1, 0) > 0.1);
}

TEST_CASE("score scale equivariance") {
  gpcp::rng::Engine engine(173);
  const Matrix x = gpcp_test::random_points(engine, 10, 1);
  const Vector y = gpcp_test::random_vector(engine, 10);
  const double c = 3.7;

  const KernelSpec spec = make_spec(1.5, 1.0, 0.5);
  const gpcp::LooEnsemble base = gpcp::score_ensemble(
      gpcp::build_loo_core(gpcp::condition(spec, x, y), Matrix(0, 1),
                           gpcp::LooMode::kClosedForm),
      y, 1.0, 1e-9);

  KernelSpec scaled = spec;
  scaled.sigma2 = c * c;  // sigma2 rescaled by c^2 alongside y -> c y
  const gpcp::LooEnsemble rescaled = gpcp::score_ensemble(
      gpcp::build_loo_core(gpcp::condition(scaled, x, c * y), Matrix(0, 1),
                           gpcp::LooMode::kClosedForm),
      c * y, 1.0, 1e-9);

  for (int i = 0; i < 10; ++i) {
    REQUIRE(rescaled.loo_residual[i] == Approx(c * base.loo_residual[i]).epsilon(1e-9));
    REQUIRE(rescaled.loo_score_gamma[i] ==
            Approx(base.loo_score_gamma[i]).epsilon(1e-9));
  }
}

TEST_CASE("retrain_full re-optimizes hyperparameters per fold") {
  gpcp::rng::Engine engine(191);
  const KernelSpec truth = make_spec(1.5, 1.0, 0.5);
  const Matrix x = gpcp_test::random_points(engine, 10, 1);
  const Vector y = gpcp_test::sample_gp_prior(truth, x, 0.05, engine);
  gpcp::MleSettings settings;
  settings.n_restarts = 2;
  settings.max_iters = 80;
  settings.seed = 5;
  const Matrix x_test = gpcp_test::random_points(engine, 3, 1);
  const gpcp::LooEnsemble ensemble = gpcp::build_loo_ensemble(
      x, y, 1.5, 0.05, settings, x_test, 1.0, 1e-6, gpcp::LooMode::kRetrainFull);
  REQUIRE(ensemble.mode == gpcp::LooMode::kRetrainFull);
  REQUIRE(ensemble.loo_residual.allFinite());
  REQUIRE(ensemble.loo_mean_at_test.allFinite());
  REQUIRE(ensemble.loo_std_at_test.minCoeff() >= 0.0);
}

TEST_CASE("loo_prediction_grid accessor") {
  const KernelSpec spec = make_spec(0.5, 1.0, 1.0, 0.1);
  gpcp::rng::Engine engine(199);
  const Matrix x = gpcp_test::random_points(engine, 6, 1);
  const Vector y = gpcp_test::random_vector(engine, 6);
  const Matrix x_test = gpcp_test::random_points(engine, 4, 1);
  const gpcp::LooEnsemble ensemble = gpcp::score_ensemble(
      gpcp::build_loo_core(gpcp::condition(spec, x, y), x_test,
                           gpcp::LooMode::kClosedForm),
      y, 1.0, 1e-6);
  const auto [means, stds] = gpcp::loo_prediction_grid(ensemble);
  REQUIRE(means == &ensemble.loo_mean_at_test);
  REQUIRE(stds == &ensemble.loo_std_at_test);
  REQUIRE(stds->minCoeff() >= 0.0);
}
