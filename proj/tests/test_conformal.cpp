#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gpcp/conformal.hpp"
#include "gpcp/gp.hpp"
#include "support.hpp"

using Catch::Approx;
using gpcp::Matrix;
using gpcp::Vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sort-based quantile oracles sharing the index arithmetic of the definitions.
double q_plus_oracle(std::vector<double> v, double alpha) {
  const auto n = static_cast<long>(v.size());
  const auto k = static_cast<long>(std::ceil((1.0 - alpha) * (n + 1)));
  if (k > n) return kInf;
  std::sort(v.begin(), v.end());
  return v[k - 1];
}

double q_minus_oracle(std::vector<double> v, double alpha) {
  const auto n = static_cast<long>(v.size());
  const auto k = static_cast<long>(std::floor(alpha * (n + 1)));
  if (k < 1) return -kInf;
  std::sort(v.begin(), v.end());
  return v[k - 1];
}

// Synthetic ensemble with consistent scores; no GP involved.
gpcp::LooEnsemble random_ensemble(gpcp::rng::Engine& engine, int n, int m,
                                  double beta = 1.0, double delta = 1e-6) {
  gpcp::LooCore core;
  core.loo_mean_at_train = gpcp_test::random_vector(engine, n);
  core.loo_std_at_train = gpcp_test::random_vector(engine, n).cwiseAbs();
  core.loo_mean_at_test.resize(n, m);
  core.loo_std_at_test.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      core.loo_mean_at_test(i, j) = engine.normal();
      core.loo_std_at_test(i, j) = std::fabs(engine.normal());
    }
  const Vector y = gpcp_test::random_vector(engine, n);
  return gpcp::score_ensemble(core, y, beta, delta);
}

}  // namespace

TEST_CASE("q_plus examples") {
  REQUIRE(gpcp::q_plus({1, 2, 3, 4}, 0.2) == 4.0);
  REQUIRE(gpcp::q_plus({5}, 0.5) == 5.0);
  REQUIRE(gpcp::q_plus({1, 2, 3}, 0.1) == kInf);
  REQUIRE_THROWS_AS(gpcp::q_plus({}, 0.1), std::invalid_argument);
}

TEST_CASE("q_minus examples and duality") {
  REQUIRE(gpcp::q_minus({1, 2, 3, 4}, 0.4) == 2.0);
  REQUIRE(gpcp::q_minus({1, 2, 3, 4}, 0.1) == -kInf);
  REQUIRE_THROWS_AS(gpcp::q_minus({}, 0.1), std::invalid_argument);

  gpcp::rng::Engine engine(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(engine.uniform_index(20));
    std::vector<double> v(n);
    for (double& x : v) x = engine.normal();
    const double alpha = 0.01 + 0.98 * engine.uniform01();
    std::vector<double> neg(v);
    for (double& x : neg) x = -x;
    REQUIRE(gpcp::q_minus(v, alpha) == -gpcp::q_plus(neg, alpha));
  }
}

TEST_CASE("quantiles match the sort oracle for n <= 50 and 99 alpha values") {
  gpcp::rng::Engine engine(5);
  for (int n = 1; n <= 50; ++n) {
    std::vector<double> v(n);
    for (double& x : v) x = engine.normal();
    for (int a = 1; a <= 99; ++a) {
      const double alpha = a / 100.0;
      REQUIRE(gpcp::q_plus(v, alpha) == q_plus_oracle(v, alpha));
      REQUIRE(gpcp::q_minus(v, alpha) == q_minus_oracle(v, alpha));
    }
  }
}

TEST_CASE("jackknife interval") {
  gpcp::rng::Engine engine(7);
  gpcp::LooEnsemble loo = random_ensemble(engine, 4, 3);

  SECTION("zero residuals give a degenerate interval at the prediction") {
    loo.loo_residual.setZero();
    Vector mean(3);
    mean << 1.0, -2.0, 0.5;
    const gpcp::IntervalSet intervals = gpcp::jackknife(mean, loo, 0.2);
    for (int j = 0; j < 3; ++j) {
      REQUIRE(intervals.lower[j] == mean[j]);
      REQUIRE(intervals.upper[j] == mean[j]);
    }
  }
  SECTION("hand example: residuals {1,2,3,4}, alpha 0.2, center 10") {
    loo.loo_residual << 1, 2, 3, 4;
    const Vector mean = Vector::Constant(3, 10.0);
    const gpcp::IntervalSet intervals = gpcp::jackknife(mean, loo, 0.2);
    REQUIRE(intervals.lower[0] == 6.0);
    REQUIRE(intervals.upper[0] == 14.0);
  }
  SECTION("constant width across test points") {
    const Vector mean = gpcp_test::random_vector(engine, 3);
    const gpcp::IntervalSet intervals = gpcp::jackknife(mean, loo, 0.1);
    const double w0 = intervals.width(0);
    REQUIRE(intervals.width(1) == Approx(w0));
    REQUIRE(intervals.width(2) == Approx(w0));
  }
}

TEST_CASE("jackknife_plus") {
  SECTION("single fold yields the whole line") {
    gpcp::rng::Engine engine(9);
    gpcp::LooEnsemble loo = random_ensemble(engine, 1, 2);
    const gpcp::IntervalSet intervals = gpcp::jackknife_plus(loo, 0.4);
    REQUIRE(intervals.lower[0] == -kInf);
    REQUIRE(intervals.upper[0] == kInf);
    REQUIRE(intervals.contains_infinite);
  }
  SECTION("equal LOO means reduce to a residual quantile around the mean") {
    gpcp::rng::Engine engine(11);
    gpcp::LooEnsemble loo = random_ensemble(engine, 4, 1);
    const double mu = 2.5;
    loo.loo_mean_at_test.setConstant(mu);
    loo.loo_residual << 1, 2, 3, 4;
    const gpcp::IntervalSet at04 = gpcp::jackknife_plus(loo, 0.4);
    REQUIRE(at04.lower[0] == Approx(mu - 3.0));
    REQUIRE(at04.upper[0] == Approx(mu + 3.0));
    const gpcp::IntervalSet at02 = gpcp::jackknife_plus(loo, 0.2);
    REQUIRE(at02.upper[0] == Approx(mu + 4.0));
  }
  SECTION("sort-based brute force on random ensembles, n <= 6") {
    gpcp::rng::Engine engine(13);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + static_cast<int>(engine.uniform_index(6));
      const int m = 1 + static_cast<int>(engine.uniform_index(4));
      const gpcp::LooEnsemble loo = random_ensemble(engine, n, m);
      const double alpha = 0.02 + 0.96 * engine.uniform01();
      const gpcp::IntervalSet intervals = gpcp::jackknife_plus(loo, alpha);
      for (int j = 0; j < m; ++j) {
        std::vector<double> lows(n), highs(n);
        for (int i = 0; i < n; ++i) {
          lows[i] = loo.loo_mean_at_test(i, j) - loo.loo_residual[i];
          highs[i] = loo.loo_mean_at_test(i, j) + loo.loo_residual[i];
        }
        REQUIRE(intervals.lower[j] == q_minus_oracle(lows, alpha));
        REQUIRE(intervals.upper[j] == q_plus_oracle(highs, alpha));
      }
    }
  }
}

TEST_CASE("jackknife_minmax") {
  SECTION("hand example") {
    gpcp::rng::Engine engine(17);
    gpcp::LooEnsemble loo = random_ensemble(engine, 4, 1);
    loo.loo_residual << 1, 2, 3, 4;
    loo.loo_mean_at_test.col(0) << 0, 1, 2, 3;
    const gpcp::IntervalSet intervals = gpcp::jackknife_minmax(loo, 0.2);
    REQUIRE(intervals.lower[0] == Approx(-4.0));
    REQUIRE(intervals.upper[0] == Approx(7.0));
  }
  SECTION("contains jackknife_plus pointwise and matches it for equal means") {
    gpcp::rng::Engine engine(19);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + static_cast<int>(engine.uniform_index(8));
      const int m = 1 + static_cast<int>(engine.uniform_index(4));
      gpcp::LooEnsemble loo = random_ensemble(engine, n, m);
      const double alpha = 0.05 + 0.9 * engine.uniform01();
      const gpcp::IntervalSet plus = gpcp::jackknife_plus(loo, alpha);
      const gpcp::IntervalSet minmax = gpcp::jackknife_minmax(loo, alpha);
      for (int j = 0; j < m; ++j) {
        REQUIRE(minmax.lower[j] <= plus.lower[j]);
        REQUIRE(minmax.upper[j] >= plus.upper[j]);
      }
      loo.loo_mean_at_test.setConstant(0.7);
      const gpcp::IntervalSet plus_eq = gpcp::jackknife_plus(loo, alpha);
      const gpcp::IntervalSet minmax_eq = gpcp::jackknife_minmax(loo, alpha);
      for (int j = 0; j < m; ++j) {
        REQUIRE(minmax_eq.lower[j] == Approx(plus_eq.lower[j]));
        REQUIRE(minmax_eq.upper[j] == Approx(plus_eq.upper[j]));
      }
    }
  }
}

TEST_CASE("jplus_gp") {
  SECTION("active floors reduce to Jackknife+ on delta-scaled scores") {
    gpcp::rng::Engine engine(23);
    gpcp::LooCore core;
    core.loo_mean_at_train = gpcp_test::random_vector(engine, 5);
    core.loo_std_at_train = Vector::Zero(5);
    core.loo_mean_at_test.resize(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) core.loo_mean_at_test(i, j) = engine.normal();
    core.loo_std_at_test = Matrix::Zero(5, 3);
    const Vector y = gpcp_test::random_vector(engine, 5);
    // All stds are 0 <= delta, so weights are delta on both sides: candidate
    // offsets collapse back to the raw residuals.
    const gpcp::LooEnsemble floored = gpcp::score_ensemble(core, y, 1.0, 1e-6);
    const gpcp::IntervalSet gp_intervals = gpcp::jplus_gp(floored, 0.2);
    const gpcp::IntervalSet plus = gpcp::jackknife_plus(floored, 0.2);
    for (int j = 0; j < 3; ++j) {
      REQUIRE(gp_intervals.lower[j] == Approx(plus.lower[j]).margin(1e-12));
      REQUIRE(gp_intervals.upper[j] == Approx(plus.upper[j]).margin(1e-12));
    }
  }
  SECTION("test-point std doubling doubles the candidate offsets (beta = 1)") {
    gpcp::rng::Engine engine(29);
    gpcp::LooEnsemble loo = random_ensemble(engine, 6, 2, 1.0, 1e-12);
    gpcp::LooEnsemble doubled = loo;
    doubled.loo_std_at_test *= 2.0;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 6; ++i) {
        const double w_base = std::max(loo.delta, loo.loo_std_at_test(i, j));
        const double w_wide =
            std::max(doubled.delta, doubled.loo_std_at_test(i, j));
        REQUIRE(w_wide == Approx(2.0 * w_base));
      }
    const gpcp::IntervalSet base = gpcp::jplus_gp(loo, 0.3);
    const gpcp::IntervalSet wide = gpcp::jplus_gp(doubled, 0.3);
    for (int j = 0; j < 2; ++j)
      REQUIRE(wide.upper[j] - wide.lower[j] >= base.upper[j] - base.lower[j]);
  }
  SECTION("sort-based brute force on random ensembles, n <= 6") {
    gpcp::rng::Engine engine(31);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + static_cast<int>(engine.uniform_index(6));
      const int m = 1 + static_cast<int>(engine.uniform_index(4));
      const double beta = 0.5 + engine.uniform01();
      const gpcp::LooEnsemble loo = random_ensemble(engine, n, m, beta);
      const double alpha = 0.02 + 0.96 * engine.uniform01();
      const gpcp::IntervalSet intervals = gpcp::jplus_gp(loo, alpha);
      for (int j = 0; j < m; ++j) {
        std::vector<double> lows(n), highs(n);
        for (int i = 0; i < n; ++i) {
          const double w =
              std::max(loo.delta, std::pow(loo.loo_std_at_test(i, j), beta));
          lows[i] = loo.loo_mean_at_test(i, j) - loo.loo_score_gamma[i] * w;
          highs[i] = loo.loo_mean_at_test(i, j) + loo.loo_score_gamma[i] * w;
        }
        REQUIRE(intervals.lower[j] == q_minus_oracle(lows, alpha));
        REQUIRE(intervals.upper[j] == q_plus_oracle(highs, alpha));
      }
    }
  }
}

TEST_CASE("jminmax_gp") {
  SECTION("contains jplus_gp pointwise") {
    gpcp::rng::Engine engine(37);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + static_cast<int>(engine.uniform_index(8));
      const int m = 1 + static_cast<int>(engine.uniform_index(4));
      const gpcp::LooEnsemble loo = random_ensemble(engine, n, m, 1.0);
      const double alpha = 0.05 + 0.9 * engine.uniform01();
      const gpcp::IntervalSet plus = gpcp::jplus_gp(loo, alpha);
      const gpcp::IntervalSet minmax = gpcp::jminmax_gp(loo, alpha);
      for (int j = 0; j < m; ++j) {
        REQUIRE(minmax.lower[j] <= plus.lower[j]);
        REQUIRE(minmax.upper[j] >= plus.upper[j]);
      }
    }
  }
  SECTION("equal means and stds give the symmetric weighted-quantile interval") {
    gpcp::rng::Engine engine(41);
    gpcp::LooEnsemble loo = random_ensemble(engine, 5, 1, 1.0);
    loo.loo_mean_at_test.setConstant(1.5);
    loo.loo_std_at_test.setConstant(0.4);
    const gpcp::IntervalSet intervals = gpcp::jminmax_gp(loo, 0.2);
    std::vector<double> weighted(5);
    for (int i = 0; i < 5; ++i)
      weighted[i] = loo.loo_score_gamma[i] * std::max(loo.delta, 0.4);
    const double q = q_plus_oracle(weighted, 0.2);
    REQUIRE(intervals.lower[0] == Approx(1.5 - q));
    REQUIRE(intervals.upper[0] == Approx(1.5 + q));
  }
  SECTION("matches direct evaluation of the formula") {
    gpcp::rng::Engine engine(43);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(engine.uniform_index(6));
      const int m = 1 + static_cast<int>(engine.uniform_index(3));
      const double beta = 0.5 + engine.uniform01();
      const gpcp::LooEnsemble loo = random_ensemble(engine, n, m, beta);
      const double alpha = 0.05 + 0.9 * engine.uniform01();
      const gpcp::IntervalSet intervals = gpcp::jminmax_gp(loo, alpha);
      for (int j = 0; j < m; ++j) {
        std::vector<double> weighted(n);
        for (int i = 0; i < n; ++i)
          weighted[i] = loo.loo_score_gamma[i] *
                        std::max(loo.delta, std::pow(loo.loo_std_at_test(i, j), beta));
        const double q = q_plus_oracle(weighted, alpha);
        REQUIRE(intervals.lower[j] == loo.loo_mean_at_test.col(j).minCoeff() - q);
        REQUIRE(intervals.upper[j] == loo.loo_mean_at_test.col(j).maxCoeff() + q);
      }
    }
  }
  SECTION("literal display variant uses the floor quantile and raw residuals") {
    gpcp::rng::Engine engine(47);
    const gpcp::LooEnsemble loo = random_ensemble(engine, 8, 2, 1.0);
    const double alpha = 0.3;  // floor(0.3 * 9) = 2, finite lower quantile
    const gpcp::IntervalSet literal = gpcp::jminmax_gp(loo, alpha, true);
    for (int j = 0; j < 2; ++j) {
      std::vector<double> weighted(8), raw(8);
      for (int i = 0; i < 8; ++i) {
        const double w = std::max(loo.delta, loo.loo_std_at_test(i, j));
        weighted[i] = loo.loo_score_gamma[i] * w;
        raw[i] = loo.loo_residual[i] * w;
      }
      REQUIRE(literal.lower[j] ==
              Approx(loo.loo_mean_at_test.col(j).minCoeff() -
                     q_minus_oracle(weighted, alpha)));
      REQUIRE(literal.upper[j] ==
              Approx(loo.loo_mean_at_test.col(j).maxCoeff() +
                     q_plus_oracle(raw, alpha)));
    }
  }
}

TEST_CASE("nesting, alpha monotonicity and translation equivariance") {
  gpcp::rng::Engine engine(53);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(engine.uniform_index(10));
    const int m = 1 + static_cast<int>(engine.uniform_index(4));
    gpcp::LooEnsemble loo = random_ensemble(engine, n, m, 1.0);
    const double a1 = 0.05 + 0.4 * engine.uniform01();
    const double a2 = a1 + 0.05 + 0.4 * engine.uniform01();

    const gpcp::IntervalSet jp1 = gpcp::jackknife_plus(loo, a1);
    const gpcp::IntervalSet jp2 = gpcp::jackknife_plus(loo, a2);
    const gpcp::IntervalSet jgp1 = gpcp::jplus_gp(loo, a1);
    const gpcp::IntervalSet jgp2 = gpcp::jplus_gp(loo, a2);
    const gpcp::IntervalSet mm1 = gpcp::jackknife_minmax(loo, a1);
    const gpcp::IntervalSet mmgp1 = gpcp::jminmax_gp(loo, a1);
    for (int j = 0; j < m; ++j) {
      // alpha monotonicity: larger alpha, narrower interval
      REQUIRE(jp2.lower[j] >= jp1.lower[j]);
      REQUIRE(jp2.upper[j] <= jp1.upper[j]);
      REQUIRE(jgp2.lower[j] >= jgp1.lower[j]);
      REQUIRE(jgp2.upper[j] <= jgp1.upper[j]);
      // nesting of the conservative variants
      REQUIRE(mm1.lower[j] <= jp1.lower[j]);
      REQUIRE(mm1.upper[j] >= jp1.upper[j]);
      REQUIRE(mmgp1.lower[j] <= jgp1.lower[j]);
      REQUIRE(mmgp1.upper[j] >= jgp1.upper[j]);
    }

    // translation by c shifts every interval by exactly c
    const double c = 2.0 * engine.normal();
    gpcp::LooEnsemble shifted = loo;
    shifted.loo_mean_at_test.array() += c;
    const gpcp::IntervalSet jp_shift = gpcp::jackknife_plus(shifted, a1);
    const gpcp::IntervalSet jgp_shift = gpcp::jplus_gp(shifted, a1);
    for (int j = 0; j < m; ++j) {
      if (std::isfinite(jp1.lower[j]))
        REQUIRE(jp_shift.lower[j] == Approx(jp1.lower[j] + c).margin(1e-9));
      if (std::isfinite(jgp1.upper[j]))
        REQUIRE(jgp_shift.upper[j] == Approx(jgp1.upper[j] + c).margin(1e-9));
    }
  }
}

TEST_CASE("marginal coverage of the weighted estimators (fixed hyperparameters)") {
  // 500 fresh draws of (training set, test point) from a known 1-D function;
  // the coverage bounds are 1-2alpha for J+GP and 1-alpha for J-minmax-GP,
  // checked with a 0.03 Monte Carlo slack.
  gpcp::KernelSpec spec;
  spec.nu = 1.5;
  spec.sigma2 = 1.0;
  spec.theta = Vector::Constant(1, 0.2);
  spec.nugget = 0.01;

  const int replications = 500;
  const int n = 30;
  for (double alpha : {0.1, 0.2}) {
    int covered_plus = 0;
    int covered_minmax = 0;
    for (int rep = 0; rep < replications; ++rep) {
      gpcp::rng::Engine engine(
          gpcp::rng::derive_seed(8888 + static_cast<int>(alpha * 100), rep));
      Matrix x(n, 1);
      Vector y(n);
      for (int i = 0; i < n; ++i) {
        x(i, 0) = engine.uniform01();
        y[i] = std::sin(3.0 * x(i, 0)) + 0.1 * engine.normal();
      }
      Matrix x_test(1, 1);
      x_test(0, 0) = engine.uniform01();
      const double y_test = std::sin(3.0 * x_test(0, 0)) + 0.1 * engine.normal();

      const gpcp::FittedGP gp = gpcp::condition(spec, x, y);
      const gpcp::LooCore core =
          gpcp::build_loo_core(gp, x_test, gpcp::LooMode::kClosedForm);
      const gpcp::LooEnsemble loo = gpcp::score_ensemble(core, y, 1.0, 1e-6);
      const gpcp::IntervalSet plus = gpcp::jplus_gp(loo, alpha);
      const gpcp::IntervalSet minmax = gpcp::jminmax_gp(loo, alpha);
      if (y_test >= plus.lower[0] && y_test <= plus.upper[0]) ++covered_plus;
      if (y_test >= minmax.lower[0] && y_test <= minmax.upper[0]) ++covered_minmax;
    }
    const double coverage_plus = static_cast<double>(covered_plus) / replications;
    const double coverage_minmax = static_cast<double>(covered_minmax) / replications;
    INFO("alpha=" << alpha << " J+GP=" << coverage_plus
                  << " J-minmax-GP=" << coverage_minmax);
    REQUIRE(coverage_plus >= 1.0 - 2.0 * alpha - 0.03);
    REQUIRE(coverage_minmax >= 1.0 - alpha - 0.03);
  }
}
