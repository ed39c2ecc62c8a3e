#pragma once

// Evaluation protocol: empirical coverage, average width with infinite
// endpoints excluded and counted, Spearman width-error correlation with
// bootstrap intervals, predictivity Q2 / MSE, the Beta soft coverage
// threshold, and the best-model selection that mirrors the report tables.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gpcp/interval.hpp"
#include "gpcp/types.hpp"
#include "gpcp/rng.hpp"
#include "gpcp/special.hpp"

namespace gpcp {

// Fraction of test outputs inside their closed interval; infinite endpoints
// count as covering.
inline double empirical_coverage(const IntervalSet& intervals, const Vector& y_test) {
  if (intervals.size() != y_test.size())
    throw std::invalid_argument("empirical_coverage: length mismatch");
  if (y_test.size() == 0)
    throw std::invalid_argument("empirical_coverage: empty test set");
  Eigen::Index covered = 0;
  for (Eigen::Index j = 0; j < y_test.size(); ++j)
    if (y_test[j] >= intervals.lower[j] && y_test[j] <= intervals.upper[j]) ++covered;
  return static_cast<double>(covered) / static_cast<double>(y_test.size());
}

// Average width over finite-width points; the infinite count is reported
// separately and never folded into the average.
inline std::pair<double, int> average_width(const IntervalSet& intervals) {
  double sum = 0.0;
  int finite = 0;
  int infinite = 0;
  for (Eigen::Index j = 0; j < intervals.size(); ++j) {
    const double w = intervals.width(j);
    if (std::isfinite(w)) {
      sum += w;
      ++finite;
    } else {
      ++infinite;
    }
  }
  const double avg = finite > 0 ? sum / finite : std::numeric_limits<double>::quiet_NaN();
  return {avg, infinite};
}

// Average ranks with ties sharing the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

// Spearman correlation: Pearson on average ranks. Not computable (nullopt)
// with fewer than three pairs or zero variance in either ranking.
inline std::optional<double> spearman(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 3) return std::nullopt;
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

// Width-error correlation with infinite-width points excluded.
inline std::optional<double> spearman_width_error(const IntervalSet& intervals,
                                                  const Vector& abs_errors,
                                                  int* excluded_count = nullptr) {
  if (intervals.size() != abs_errors.size())
    throw std::invalid_argument("spearman_width_error: length mismatch");
  std::vector<double> widths, errors;
  widths.reserve(intervals.size());
  errors.reserve(intervals.size());
  int excluded = 0;
  for (Eigen::Index j = 0; j < intervals.size(); ++j) {
    const double w = intervals.width(j);
    if (std::isfinite(w)) {
      widths.push_back(w);
      errors.push_back(abs_errors[j]);
    } else {
      ++excluded;
    }
  }
  if (excluded_count) *excluded_count = excluded;
  return spearman(widths, errors);
}

struct BootstrapSummary {
  double median = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();   // 2.5 percentile
  double upper = std::numeric_limits<double>::quiet_NaN();   // 97.5 percentile
  std::vector<double> samples;                               // for box plots
  int degenerate_count = 0;                                  // skipped resamples
};

namespace detail {

inline double sorted_median(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Nearest-rank percentile on an already sorted sample.
inline double sorted_percentile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

}  // namespace detail

// Bootstrap over test indices (with replacement); resample b uses the stream
// derived from (seed, b), so results do not depend on evaluation order.
inline BootstrapSummary bootstrap_spearman(const IntervalSet& intervals,
                                           const Vector& abs_errors, int n_boot,
                                           std::uint64_t seed) {
  if (n_boot < 1) throw std::invalid_argument("bootstrap_spearman: n_boot must be >= 1");
  if (intervals.size() != abs_errors.size())
    throw std::invalid_argument("bootstrap_spearman: length mismatch");
  const Eigen::Index m = intervals.size();
  if (m < 3) throw std::invalid_argument("bootstrap_spearman: need at least 3 test points");

  std::vector<double> all_widths(m), all_errors(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    all_widths[j] = intervals.width(j);
    all_errors[j] = abs_errors[j];
  }

  BootstrapSummary summary;
  summary.samples.reserve(n_boot);
  std::vector<double> widths, errors;
  for (int b = 0; b < n_boot; ++b) {
    rng::Engine engine(rng::derive_seed(seed, static_cast<std::uint64_t>(b)));
    widths.clear();
    errors.clear();
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto idx = static_cast<Eigen::Index>(
          engine.uniform_index(static_cast<std::uint64_t>(m)));
      if (std::isfinite(all_widths[idx])) {
        widths.push_back(all_widths[idx]);
        errors.push_back(all_errors[idx]);
      }
    }
    const std::optional<double> r = spearman(widths, errors);
    if (r)
      summary.samples.push_back(*r);
    else
      ++summary.degenerate_count;
  }
  if (summary.samples.empty())
    throw std::runtime_error("bootstrap_spearman: every resample was degenerate");

  std::vector<double> sorted = summary.samples;
  summary.median = detail::sorted_median(sorted);
  summary.lower = detail::sorted_percentile(sorted, 0.025);
  summary.upper = detail::sorted_percentile(sorted, 0.975);
  return summary;
}

// Q2 = 1 - sum (y - pred)^2 / sum (y - mean(y))^2 over the test set.
inline double predictivity_q2(const Vector& y_test, const Vector& predictions) {
  if (y_test.size() != predictions.size())
    throw std::invalid_argument("predictivity_q2: length mismatch");
  if (y_test.size() < 2)
    throw std::invalid_argument("predictivity_q2: need at least two test points");
  const double mean = y_test.mean();
  const double total = (y_test.array() - mean).square().sum();
  if (total <= 0.0) throw std::invalid_argument("predictivity_q2: zero test variance");
  const double residual = (y_test - predictions).squaredNorm();
  return 1.0 - residual / total;
}

inline double mean_squared_error(const Vector& y_test, const Vector& predictions) {
  if (y_test.size() != predictions.size())
    throw std::invalid_argument("mean_squared_error: length mismatch");
  if (y_test.size() < 1)
    throw std::invalid_argument("mean_squared_error: empty test set");
  return (y_test - predictions).squaredNorm() / static_cast<double>(y_test.size());
}

// Soft coverage threshold: the upsilon-quantile of Beta(n+1-l, l) with
// l = floor((n+1) alpha), found by bisection on the regularized incomplete
// beta to 1e-6. l = 0 degenerates to a hard threshold at 1 - alpha.
inline double beta_soft_threshold(int n_train, double alpha, double upsilon) {
  if (n_train < 1) throw std::invalid_argument("beta_soft_threshold: n_train must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("beta_soft_threshold: alpha must lie in (0,1)");
  if (!(upsilon > 0.0 && upsilon < 1.0))
    throw std::invalid_argument("beta_soft_threshold: upsilon must lie in (0,1)");

  const auto l = static_cast<long long>(
      std::floor((static_cast<double>(n_train) + 1.0) * alpha));
  if (l == 0) return 1.0 - alpha;

  const double a = static_cast<double>(n_train) + 1.0 - static_cast<double>(l);
  const double b = static_cast<double>(l);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < upsilon)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// One (method, nu, beta, alpha) evaluation row.
struct EvalRecord {
  Method method = Method::kCredibility;
  double nu = 0.0;
  std::optional<double> beta_power;
  double alpha = 0.0;
  double coverage = 0.0;
  double avg_width = std::numeric_limits<double>::quiet_NaN();
  int width_infinite_count = 0;
  std::optional<double> spearman_median;
  std::pair<double, double> spearman_ci{std::numeric_limits<double>::quiet_NaN(),
                                        std::numeric_limits<double>::quiet_NaN()};
  std::vector<double> spearman_samples;
  int spearman_degenerate_count = 0;
  double q2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  bool passes_soft_threshold = false;
};

struct Selection {
  std::optional<EvalRecord> min_width;
  std::optional<EvalRecord> max_spearman;
};

// Among records passing the soft threshold at this alpha: the smallest
// average width and the largest median Spearman correlation. Both slots may
// be empty when nothing passes.
inline Selection select_best(const std::vector<EvalRecord>& records, double alpha) {
  Selection selection;
  for (const EvalRecord& record : records) {
    if (record.alpha != alpha || !record.passes_soft_threshold) continue;
    if (std::isfinite(record.avg_width)) {
      if (!selection.min_width || record.avg_width < selection.min_width->avg_width)
        selection.min_width = record;
    }
    if (record.spearman_median) {
      if (!selection.max_spearman ||
          *record.spearman_median > *selection.max_spearman->spearman_median)
        selection.max_spearman = record;
    }
  }
  return selection;
}

}  // namespace gpcp
