#pragma once

// Shared helpers for the test suites: independent oracles and small random
// problem generators. Everything here stays off the library's code paths so
// the checks remain two-sided.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "gpcp/gp.hpp"
#include "gpcp/kernels.hpp"
#include "gpcp/rng.hpp"

namespace gpcp_test {

// General-Bessel Matern oracle (the closed forms are tested against this).
inline double matern_bessel_oracle(double nu, double r, double sigma2) {
  if (r == 0.0) return sigma2;
  const double z = std::sqrt(2.0 * nu) * r;
  return sigma2 * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) *
         std::cyl_bessel_k(nu, z);
}

inline gpcp::Matrix random_points(gpcp::rng::Engine& engine, int n, int d,
                                  double lo = -1.5, double hi = 1.5) {
  gpcp::Matrix points(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      points(i, j) = lo + (hi - lo) * engine.uniform01();
  return points;
}

inline gpcp::Vector random_vector(gpcp::rng::Engine& engine, int n, double scale = 1.0) {
  gpcp::Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * engine.normal();
  return v;
}

// Draw y from the GP prior defined by `spec` (plus observation noise).
inline gpcp::Vector sample_gp_prior(const gpcp::KernelSpec& spec,
                                    const gpcp::Matrix& points, double noise_sd,
                                    gpcp::rng::Engine& engine) {
  const gpcp::Matrix gram = gpcp::gram_matrix(spec, points, false);
  const int n = static_cast<int>(points.rows());
  gpcp::Matrix bumped = gram;
  bumped.diagonal().array() += 1e-10 * spec.sigma2;
  const Eigen::LLT<gpcp::Matrix> llt(bumped);
  gpcp::Vector z(n);
  for (int i = 0; i < n; ++i) z[i] = engine.normal();
  gpcp::Vector y = llt.matrixL() * z;
  if (noise_sd > 0.0)
    for (int i = 0; i < n; ++i) y[i] += noise_sd * engine.normal();
  return y;
}

}  // namespace gpcp_test
