#pragma once

// Matern covariance family with half-integer regularity and nugget-augmented
// Gram assembly. The radial profile uses the exact polynomial-times-
// exponential expansion for nu = (2k+1)/2, so no Bessel evaluation happens
// on the hot path:
//
//   K(x, x') = sigma^2 * 2^{1-nu}/Gamma(nu) * (sqrt(2 nu) r)^nu
//              * BesselK_nu(sqrt(2 nu) r),   r = ||(x - x') / theta||
//
// which for nu = p + 1/2 collapses to
//   sigma^2 * exp(-s r) * sum_{j=0}^{p} c_j (s r)^j,  s = sqrt(2 nu).

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpcp/types.hpp"

namespace gpcp {

// How the nugget sigma_eps lands on the Gram diagonal. The default follows
// the K + sigma_eps * I convention literally even though sigma_eps is quoted
// as a standard deviation; the alternative squares it first.
enum class NuggetMode { kSdOnDiagonal, kVarianceOnDiagonal };

struct KernelSpec {
  double nu = 1.5;
  double sigma2 = 1.0;
  Vector theta;  // one positive length-scale per input dimension
  double nugget = 0.0;
  NuggetMode nugget_mode = NuggetMode::kSdOnDiagonal;

  // Value actually added to the Gram diagonal when the nugget is applied.
  double diagonal_nugget() const {
    return nugget_mode == NuggetMode::kSdOnDiagonal ? nugget : nugget * nugget;
  }
};

inline bool is_half_integer_regularity(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) return false;
  const double two_nu = 2.0 * nu;
  const double rounded = std::round(two_nu);
  // 2*nu must be an odd integer.
  return std::fabs(two_nu - rounded) < 1e-9 &&
         std::llround(rounded) % 2 == 1;
}

inline void validate_kernel_spec(const KernelSpec& spec) {
  if (!is_half_integer_regularity(spec.nu))
    throw std::invalid_argument("KernelSpec: nu must be a positive half-integer (2k+1)/2");
  if (!(spec.sigma2 > 0.0) || !std::isfinite(spec.sigma2))
    throw std::invalid_argument("KernelSpec: sigma2 must be positive and finite");
  if (spec.theta.size() == 0)
    throw std::invalid_argument("KernelSpec: theta must have at least one entry");
  for (Eigen::Index i = 0; i < spec.theta.size(); ++i)
    if (!(spec.theta[i] > 0.0) || !std::isfinite(spec.theta[i]))
      throw std::invalid_argument("KernelSpec: every theta entry must be positive and finite");
  if (!(spec.nugget >= 0.0) || !std::isfinite(spec.nugget))
    throw std::invalid_argument("KernelSpec: nugget must be non-negative and finite");
}

// Unit-variance Matern correlation as a function of the theta-scaled
// distance. Coefficients of the half-integer expansion are precomputed so
// Gram assembly costs one exp and a short Horner per entry.
class MaternProfile {
 public:
  explicit MaternProfile(double nu) {
    if (!is_half_integer_regularity(nu))
      throw std::invalid_argument("MaternProfile: nu must be a positive half-integer");
    const int p = static_cast<int>(std::llround(nu - 0.5));
    sqrt_two_nu_ = std::sqrt(2.0 * nu);
    coeff_.resize(p + 1);
    // c_j = p!/(2p)! * (2p - j)! / ((p - j)! j!) * 2^j, coefficient of (s r)^j.
    for (int j = 0; j <= p; ++j) {
      double log_c = std::lgamma(p + 1.0) - std::lgamma(2.0 * p + 1.0) +
                     std::lgamma(2.0 * p - j + 1.0) - std::lgamma(p - j + 1.0) -
                     std::lgamma(j + 1.0) + j * std::log(2.0);
      coeff_[j] = std::exp(log_c);
    }
    coeff_[0] = 1.0;  // exact by construction; pin against lgamma round-off
  }

  double operator()(double r) const {
    if (r == 0.0) return 1.0;
    const double z = sqrt_two_nu_ * r;
    double poly = coeff_.back();
    for (int j = static_cast<int>(coeff_.size()) - 2; j >= 0; --j)
      poly = poly * z + coeff_[j];
    return poly * std::exp(-z);
  }

  double sqrt_two_nu() const { return sqrt_two_nu_; }

 private:
  double sqrt_two_nu_ = 0.0;
  std::vector<double> coeff_;
};

namespace detail {

inline void check_point_dimension(const KernelSpec& spec, const Vector& x,
                                  const char* where) {
  if (x.size() != spec.theta.size())
    throw std::invalid_argument(std::string(where) + ": point dimension does not match theta");
  if (!x.allFinite())
    throw std::invalid_argument(std::string(where) + ": non-finite input coordinate");
}

}  // namespace detail

// theta-scaled Euclidean distance r = ||(x - xp) / theta||.
inline double scaled_distance(const Vector& theta, const Vector& x, const Vector& xp) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double d = (x[i] - xp[i]) / theta[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

inline double matern_eval(const KernelSpec& spec, const Vector& x, const Vector& xp) {
  validate_kernel_spec(spec);
  detail::check_point_dimension(spec, x, "matern_eval");
  detail::check_point_dimension(spec, xp, "matern_eval");
  const MaternProfile profile(spec.nu);
  return spec.sigma2 * profile(scaled_distance(spec.theta, x, xp));
}

// Gram matrix K (optionally K_eps = K + nugget diagonal). Symmetric by
// construction: the lower triangle is computed and mirrored.
inline Matrix gram_matrix(const KernelSpec& spec, const Matrix& points, bool with_nugget) {
  validate_kernel_spec(spec);
  const Eigen::Index n = points.rows();
  if (n < 1) throw std::invalid_argument("gram_matrix: need at least one point");
  if (points.cols() != spec.theta.size())
    throw std::invalid_argument("gram_matrix: point dimension does not match theta");
  if (!points.allFinite())
    throw std::invalid_argument("gram_matrix: non-finite input coordinate");

  const MaternProfile profile(spec.nu);
  Matrix gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = spec.sigma2;
    for (Eigen::Index j = 0; j < i; ++j) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < points.cols(); ++k) {
        const double d = (points(i, k) - points(j, k)) / spec.theta[k];
        sum += d * d;
      }
      const double value = spec.sigma2 * profile(std::sqrt(sum));
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  if (with_nugget && spec.nugget > 0.0)
    gram.diagonal().array() += spec.diagonal_nugget();
  return gram;
}

// Covariance vector k(x) against a point set; the nugget never applies here.
inline Vector cross_vector(const KernelSpec& spec, const Matrix& points, const Vector& x) {
  validate_kernel_spec(spec);
  detail::check_point_dimension(spec, x, "cross_vector");
  if (points.cols() != x.size())
    throw std::invalid_argument("cross_vector: point set dimension does not match query");
  const MaternProfile profile(spec.nu);
  Vector k(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      const double d = (x[j] - points(i, j)) / spec.theta[j];
      sum += d * d;
    }
    k[i] = spec.sigma2 * profile(std::sqrt(sum));
  }
  return k;
}

// Pairwise unscaled Euclidean distances; cached by the MLE path so isotropic
// candidates only rescale it instead of re-reading the points.
inline Matrix pairwise_distances(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Matrix dist = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = (points.row(i) - points.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  return dist;
}

}  // namespace gpcp
