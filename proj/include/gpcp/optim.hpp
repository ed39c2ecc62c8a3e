#pragma once

// Box-constrained Nelder-Mead and Latin-hypercube restart points for the
// hyperparameter search. Candidates are projected onto the box before every
// evaluation, so the objective never sees out-of-bound parameters.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gpcp/rng.hpp"

namespace gpcp {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

inline NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, int max_iters, double tolerance = 1e-12) {
  const Eigen::Index dim = start.size();
  if (lower.size() != dim || upper.size() != dim)
    throw std::invalid_argument("nelder_mead: bound dimensions do not match start");
  for (Eigen::Index i = 0; i < dim; ++i)
    if (!(lower[i] < upper[i]))
      throw std::invalid_argument("nelder_mead: lower bound must be below upper bound");

  const auto project = [&](Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
    return v;
  };

  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  const int nv = static_cast<int>(dim) + 1;
  std::vector<Eigen::VectorXd> vertex(nv);
  std::vector<double> value(nv);
  vertex[0] = project(start);
  for (int k = 1; k < nv; ++k) {
    Eigen::VectorXd v = vertex[0];
    const Eigen::Index i = k - 1;
    const double step = 0.05 * (upper[i] - lower[i]);
    v[i] += (v[i] + step <= upper[i]) ? step : -step;
    vertex[k] = project(v);
  }
  for (int k = 0; k < nv; ++k) value[k] = objective(vertex[k]);

  std::vector<int> order(nv);
  const auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return value[a] < value[b]; });
  };

  NelderMeadResult result;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    sort_vertices();
    const int best = order[0];
    const int worst = order[nv - 1];
    const int second_worst = order[nv - 2];

    const double spread = std::fabs(value[worst] - value[best]);
    if (spread <= tolerance * (std::fabs(value[best]) + tolerance)) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < nv; ++k)
      if (k != worst) centroid += vertex[k];
    centroid /= static_cast<double>(nv - 1);

    const Eigen::VectorXd reflected =
        project(centroid + kReflect * (centroid - vertex[worst]));
    const double f_reflected = objective(reflected);

    if (f_reflected < value[best]) {
      const Eigen::VectorXd expanded =
          project(centroid + kExpand * (reflected - centroid));
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
    } else if (f_reflected < value[second_worst]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
    } else {
      const bool outside = f_reflected < value[worst];
      const Eigen::VectorXd base = outside ? reflected : vertex[worst];
      const Eigen::VectorXd contracted = project(centroid + kContract * (base - centroid));
      const double f_contracted = objective(contracted);
      if (f_contracted < (outside ? f_reflected : value[worst])) {
        vertex[worst] = contracted;
        value[worst] = f_contracted;
      } else {
        const int anchor = best;
        for (int k = 0; k < nv; ++k) {
          if (k == anchor) continue;
          vertex[k] = project(vertex[anchor] + kShrink * (vertex[k] - vertex[anchor]));
          value[k] = objective(vertex[k]);
        }
      }
    }
  }

  sort_vertices();
  result.x = vertex[order[0]];
  result.value = value[order[0]];
  result.iterations = iter;
  return result;
}

// Latin-hypercube sample of `count` start points inside [lower, upper].
inline std::vector<Eigen::VectorXd> latin_hypercube_starts(
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int count,
    rng::Engine& engine) {
  const Eigen::Index dim = lower.size();
  std::vector<Eigen::VectorXd> starts(count, Eigen::VectorXd(dim));
  std::vector<int> slot(count);
  for (Eigen::Index d = 0; d < dim; ++d) {
    std::iota(slot.begin(), slot.end(), 0);
    for (int i = count - 1; i > 0; --i) {
      const int j = static_cast<int>(engine.uniform_index(i + 1));
      std::swap(slot[i], slot[j]);
    }
    for (int i = 0; i < count; ++i) {
      const double u = (slot[i] + engine.uniform01()) / count;
      starts[i][d] = lower[d] + u * (upper[d] - lower[d]);
    }
  }
  return starts;
}

}  // namespace gpcp
