#pragma once

// Analytic benchmark functions, input-distribution samplers, seeded DoE
// generation with additive Gaussian noise, and input standardization.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <iostream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpcp/kernels.hpp"
#include "gpcp/rng.hpp"

namespace gpcp {

struct MarginalDistribution {
  enum class Kind { kUniform, kNormal, kTriangular };

  Kind kind = Kind::kUniform;
  // uniform(a, b); normal(mu = a, sd = b); triangular(a, b, c) with mode b.
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;

  static MarginalDistribution uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: need a < b");
    return {Kind::kUniform, lo, hi, 0.0};
  }
  static MarginalDistribution normal(double mu, double sd) {
    if (!(sd > 0.0)) throw std::invalid_argument("normal: need sd > 0");
    return {Kind::kNormal, mu, sd, 0.0};
  }
  static MarginalDistribution triangular(double lo, double mode, double hi) {
    if (!(lo <= mode && mode <= hi && lo < hi))
      throw std::invalid_argument("triangular: need a <= b <= c and a < c");
    return {Kind::kTriangular, lo, mode, hi};
  }

  double mean() const {
    switch (kind) {
      case Kind::kUniform: return 0.5 * (a + b);
      case Kind::kNormal: return a;
      case Kind::kTriangular: return (a + b + c) / 3.0;
    }
    return 0.0;
  }

  double stddev() const {
    switch (kind) {
      case Kind::kUniform: return (b - a) / std::sqrt(12.0);
      case Kind::kNormal: return b;
      case Kind::kTriangular:
        return std::sqrt((a * a + b * b + c * c - a * b - a * c - b * c) / 18.0);
    }
    return 0.0;
  }

  double sample(rng::Engine& engine) const {
    switch (kind) {
      case Kind::kUniform:
        return a + (b - a) * engine.uniform01();
      case Kind::kNormal:
        return a + b * engine.normal();
      case Kind::kTriangular: {
        // Inverse CDF.
        const double u = engine.uniform01();
        const double pivot = (b - a) / (c - a);
        if (u < pivot) return a + std::sqrt(u * (b - a) * (c - a));
        return c - std::sqrt((1.0 - u) * (c - b) * (c - a));
      }
    }
    return 0.0;
  }
};

struct MvNormal {
  Vector mean;
  Matrix covariance;
};

// Either independent per-dimension marginals or one joint Gaussian.
struct InputDistribution {
  std::vector<MarginalDistribution> marginals;
  std::optional<MvNormal> joint;

  Eigen::Index dimension() const {
    return joint ? joint->mean.size()
                 : static_cast<Eigen::Index>(marginals.size());
  }
};

enum class BenchFunction { kMorokoffCaflisch, kWingWeight };

namespace detail {

inline void warn_once(const char* message) {
  static std::mutex mutex;
  static std::vector<std::string> seen;
  std::lock_guard<std::mutex> lock(mutex);
  for (const auto& s : seen)
    if (s == message) return;
  seen.emplace_back(message);
  std::cerr << "gpcp: warning: " << message << "\n";
}

}  // namespace detail

// (1/2) (1 + 1/d)^d prod_i x_i^{1/d} on the unit cube.
inline double morokoff_caflisch(const Vector& x) {
  const Eigen::Index d = x.size();
  if (d < 1) throw std::invalid_argument("morokoff_caflisch: empty input");
  const double dd = static_cast<double>(d);
  double product = 1.0;
  bool clamped = false;
  for (Eigen::Index i = 0; i < d; ++i) {
    double xi = x[i];
    if (xi < 0.0 || xi > 1.0) {
      xi = std::clamp(xi, 0.0, 1.0);
      clamped = true;
    }
    product *= std::pow(xi, 1.0 / dd);
  }
  if (clamped)
    detail::warn_once("morokoff_caflisch: coordinate outside [0,1] clamped");
  return 0.5 * std::pow(1.0 + 1.0 / dd, dd) * product;
}

// Table of wing-weight input boxes; the angle component X4 is in degrees.
inline std::vector<std::pair<double, double>> wing_weight_domains() {
  return {{150.0, 200.0}, {220.0, 300.0}, {6.0, 10.0},     {-10.0, 10.0},
          {16.0, 45.0},   {0.5, 1.0},     {0.08, 0.18},    {2.5, 6.0},
          {1700.0, 2500.0}, {0.025, 0.08}};
}

inline double wing_weight(const Vector& x) {
  if (x.size() != 10) throw std::invalid_argument("wing_weight: input must be 10-dimensional");
  const auto domains = wing_weight_domains();
  for (int i = 0; i < 10; ++i)
    if (x[i] < domains[i].first || x[i] > domains[i].second) {
      detail::warn_once("wing_weight: input outside its reference domain");
      break;
    }
  const double angle = x[3] * rng::kTwoPi / 360.0;  // degrees -> radians
  const double cos_angle = std::cos(angle);
  return 0.036 * std::pow(x[0], 0.758) * std::pow(x[1], 0.0035) *
             std::pow(x[2] / (cos_angle * cos_angle), 0.6) *
             std::pow(x[4], 0.006) * std::pow(x[5], 0.04) *
             std::pow(100.0 * x[6] / cos_angle, -0.3) *
             std::pow(x[7] * x[8], 0.49) +
         x[0] * x[9];
}

inline InputDistribution morokoff_default_inputs(int dimension) {
  if (dimension < 1) throw std::invalid_argument("morokoff_default_inputs: d >= 1");
  InputDistribution dist;
  for (int i = 0; i < dimension; ++i)
    dist.marginals.push_back(MarginalDistribution::uniform(0.0, 1.0));
  return dist;
}

inline InputDistribution wing_weight_default_inputs() {
  InputDistribution dist;
  for (const auto& [lo, hi] : wing_weight_domains())
    dist.marginals.push_back(MarginalDistribution::uniform(lo, hi));
  return dist;
}

// Input marginals of the clogging-rate simulator benchmark; the simulator
// itself is not reproducible here, only its design distribution.
inline InputDistribution tpd_inputs() {
  InputDistribution dist;
  dist.marginals = {
      MarginalDistribution::normal(101.6, 4.0),
      MarginalDistribution::normal(0.0233, 0.0005),
      MarginalDistribution::triangular(0.2, 0.3, 0.5),
      MarginalDistribution::triangular(0.01, 0.05, 0.3),
      MarginalDistribution::triangular(0.5e-6, 5.0e-6, 10.0e-6),
      MarginalDistribution::triangular(1.0e-9, 4.5e-9, 8.0e-9),
      MarginalDistribution::triangular(0.1e-4, 7.8e-4, 12.0e-4),
  };
  return dist;
}

struct SyntheticProblem {
  BenchFunction function = BenchFunction::kMorokoffCaflisch;
  int dimension = 10;  // morokoff only; wing weight is fixed at 10
  InputDistribution inputs;  // empty -> per-function default
  double noise_sd = 0.0;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

inline double evaluate_bench(BenchFunction function, const Vector& x) {
  switch (function) {
    case BenchFunction::kMorokoffCaflisch: return morokoff_caflisch(x);
    case BenchFunction::kWingWeight: return wing_weight(x);
  }
  throw std::invalid_argument("evaluate_bench: unknown function");
}

struct Doe {
  Matrix x;
  Vector y;
  Vector y_noiseless;
};

// Seeded i.i.d. design: coordinates drawn per sample in dimension order,
// then the output noise, so a fixed seed pins (X, y) exactly.
inline Doe sample_doe(const SyntheticProblem& problem) {
  if (problem.n_samples < 1) throw std::invalid_argument("sample_doe: n_samples >= 1");
  if (problem.noise_sd < 0.0) throw std::invalid_argument("sample_doe: noise_sd >= 0");

  InputDistribution inputs = problem.inputs;
  if (inputs.marginals.empty() && !inputs.joint) {
    inputs = problem.function == BenchFunction::kWingWeight
                 ? wing_weight_default_inputs()
                 : morokoff_default_inputs(problem.dimension);
  }
  const Eigen::Index d = inputs.dimension();
  if (problem.function == BenchFunction::kWingWeight && d != 10)
    throw std::invalid_argument("sample_doe: wing weight needs 10 inputs");

  Eigen::LLT<Matrix> joint_chol;
  if (inputs.joint) {
    if (inputs.joint->covariance.rows() != d || inputs.joint->covariance.cols() != d)
      throw std::invalid_argument("sample_doe: covariance dimension mismatch");
    joint_chol.compute(inputs.joint->covariance);
    if (joint_chol.info() != Eigen::Success)
      throw std::invalid_argument("sample_doe: covariance is not positive definite");
  }

  rng::Engine engine(problem.seed);
  Doe doe;
  doe.x.resize(problem.n_samples, d);
  doe.y.resize(problem.n_samples);
  doe.y_noiseless.resize(problem.n_samples);
  Vector z(d);
  const bool clamp_cube = problem.function == BenchFunction::kMorokoffCaflisch;
  for (int s = 0; s < problem.n_samples; ++s) {
    if (inputs.joint) {
      for (Eigen::Index k = 0; k < d; ++k) z[k] = engine.normal();
      Vector draw = inputs.joint->mean + joint_chol.matrixL() * z;
      if (clamp_cube)
        for (Eigen::Index k = 0; k < d; ++k) draw[k] = std::clamp(draw[k], 0.0, 1.0);
      doe.x.row(s) = draw;
    } else {
      for (Eigen::Index k = 0; k < d; ++k)
        doe.x(s, k) = inputs.marginals[k].sample(engine);
    }
    doe.y_noiseless[s] = evaluate_bench(problem.function, doe.x.row(s));
    doe.y[s] = doe.y_noiseless[s] +
               (problem.noise_sd > 0.0 ? problem.noise_sd * engine.normal() : 0.0);
  }
  return doe;
}

// Per-column affine transform recorded at construction and applied
// identically to any later point set.
struct StandardizeTransform {
  Vector mean;
  Vector stddev;

  Matrix apply(const Matrix& x) const {
    if (x.cols() != mean.size())
      throw std::invalid_argument("StandardizeTransform: dimension mismatch");
    Matrix out = x;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      out.col(c) = (x.col(c).array() - mean[c]) / stddev[c];
    return out;
  }
};

// Transform from the known distribution moments.
inline StandardizeTransform standardize_from_moments(const InputDistribution& inputs) {
  const Eigen::Index d = inputs.dimension();
  StandardizeTransform transform;
  transform.mean.resize(d);
  transform.stddev.resize(d);
  if (inputs.joint) {
    for (Eigen::Index c = 0; c < d; ++c) {
      transform.mean[c] = inputs.joint->mean[c];
      const double var = inputs.joint->covariance(c, c);
      if (!(var > 0.0))
        throw std::invalid_argument("standardize_from_moments: zero variance component");
      transform.stddev[c] = std::sqrt(var);
    }
  } else {
    for (Eigen::Index c = 0; c < d; ++c) {
      transform.mean[c] = inputs.marginals[c].mean();
      transform.stddev[c] = inputs.marginals[c].stddev();
      if (!(transform.stddev[c] > 0.0))
        throw std::invalid_argument("standardize_from_moments: zero variance component");
    }
  }
  return transform;
}

// Empirical transform with population (1/n) variance.
inline StandardizeTransform standardize_empirical(const Matrix& x_train) {
  if (x_train.rows() < 1)
    throw std::invalid_argument("standardize_empirical: empty training set");
  StandardizeTransform transform;
  const Eigen::Index d = x_train.cols();
  transform.mean.resize(d);
  transform.stddev.resize(d);
  const double n = static_cast<double>(x_train.rows());
  for (Eigen::Index c = 0; c < d; ++c) {
    const double mean = x_train.col(c).mean();
    const double var = (x_train.col(c).array() - mean).square().sum() / n;
    if (!(var > 0.0))
      throw std::invalid_argument("standardize_empirical: zero variance in column " +
                                  std::to_string(c));
    transform.mean[c] = mean;
    transform.stddev[c] = std::sqrt(var);
  }
  return transform;
}

}  // namespace gpcp
