#pragma once

#include <Eigen/Dense>

#include "gpcp/types.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace gpcp {

enum class Method {
  kCredibility,
  kJackknife,
  kJackknifePlus,
  kJackknifeMinmax,
  kJPlusGp,
  kJMinmaxGp,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kCredibility: return "credibility";
    case Method::kJackknife: return "jackknife";
    case Method::kJackknifePlus: return "jackknife_plus";
    case Method::kJackknifeMinmax: return "jackknife_minmax";
    case Method::kJPlusGp: return "jplus_gp";
    case Method::kJMinmaxGp: return "jminmax_gp";
  }
  return "unknown";
}

inline Method method_from_name(const std::string& name) {
  for (Method m : {Method::kCredibility, Method::kJackknife, Method::kJackknifePlus,
                   Method::kJackknifeMinmax, Method::kJPlusGp, Method::kJMinmaxGp})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown method name: " + name);
}

// Per-test-point prediction interval produced by one
// (method, nu, beta, alpha) combination. Endpoints may be +-infinity when an
// empirical-quantile index falls outside 1..n.
struct IntervalSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Method method = Method::kCredibility;
  double alpha = 0.0;
  double kernel_nu = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> beta_power;
  bool contains_infinite = false;

  Eigen::Index size() const { return lower.size(); }

  double width(Eigen::Index j) const { return upper[j] - lower[j]; }
};

}  // namespace gpcp
