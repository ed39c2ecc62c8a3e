#pragma once

// Tabular dataset ingestion and deterministic train/test splitting.
// CSV contract: header row, configurable single-character delimiter,
// decimal point, UTF-8. Rows with a missing or unparseable cell are dropped
// and counted under the default policy.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpcp/kernels.hpp"
#include "gpcp/rng.hpp"

namespace gpcp {

enum class MissingPolicy { kDropRow, kError };

struct TabularDataset {
  std::string name;
  Matrix x;
  Vector y;
  std::vector<std::string> feature_names;
  int rows_dropped = 0;
  std::uint64_t source_digest = 0;

  Eigen::Index size() const { return y.size(); }
};

namespace detail {

inline std::uint64_t fnv1a_digest(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, delimiter)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

inline bool parse_cell(const std::string& cell, double* out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double value = 0.0;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) return false;
  *out = value;
  return true;
}

}  // namespace detail

inline TabularDataset load_csv(const std::string& path, const std::string& target_column,
                               MissingPolicy policy = MissingPolicy::kDropRow,
                               char delimiter = ',') {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("load_csv: cannot read " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  const std::string content = buffer.str();

  std::istringstream stream(content);
  std::string line;
  if (!std::getline(stream, line)) throw std::runtime_error("load_csv: empty file " + path);
  const std::vector<std::string> header = detail::split_line(line, delimiter);

  Eigen::Index target_index = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == target_column) target_index = static_cast<Eigen::Index>(c);
  if (target_index < 0)
    throw std::runtime_error("load_csv: target column '" + target_column +
                             "' not found in " + path);

  const auto n_cols = static_cast<Eigen::Index>(header.size());
  std::vector<std::vector<double>> rows;
  int dropped = 0;
  std::size_t line_number = 1;
  while (std::getline(stream, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_line(line, delimiter);
    bool complete = cells.size() == static_cast<std::size_t>(n_cols);
    std::vector<double> parsed(n_cols);
    if (complete) {
      for (Eigen::Index c = 0; c < n_cols; ++c)
        if (!detail::parse_cell(cells[c], &parsed[c])) {
          complete = false;
          break;
        }
    }
    if (!complete) {
      if (policy == MissingPolicy::kError)
        throw std::runtime_error("load_csv: missing or unparseable cell at line " +
                                 std::to_string(line_number) + " of " + path);
      ++dropped;
      continue;
    }
    rows.push_back(std::move(parsed));
  }

  if (rows.size() < 2)
    throw std::runtime_error("load_csv: fewer than 2 clean rows in " + path);

  TabularDataset dataset;
  dataset.name = path;
  dataset.rows_dropped = dropped;
  dataset.source_digest = detail::fnv1a_digest(content);
  const auto n = static_cast<Eigen::Index>(rows.size());
  dataset.x.resize(n, n_cols - 1);
  dataset.y.resize(n);
  for (Eigen::Index c = 0; c < n_cols; ++c)
    if (c != target_index) dataset.feature_names.push_back(header[c]);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index feature = 0;
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      if (c == target_index)
        dataset.y[r] = rows[r][c];
      else
        dataset.x(r, feature++) = rows[r][c];
    }
  }
  return dataset;
}

struct SplitIndices {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

// Seeded Fisher-Yates permutation; train takes the first floor(n * fraction)
// slots. Indices are reported in ascending order within each side.
inline SplitIndices split_indices(Eigen::Index n, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must lie in (0,1)");
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  rng::Engine engine(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        engine.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }
  const auto train_size = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(n) * train_fraction));
  if (train_size < 2 || n - train_size < 1)
    throw std::invalid_argument("split: resulting train or test side is too small");
  SplitIndices indices;
  indices.train.assign(order.begin(), order.begin() + train_size);
  indices.test.assign(order.begin() + train_size, order.end());
  std::sort(indices.train.begin(), indices.train.end());
  std::sort(indices.test.begin(), indices.test.end());
  return indices;
}

inline std::pair<TabularDataset, TabularDataset> split(const TabularDataset& dataset,
                                                       double train_fraction,
                                                       std::uint64_t seed) {
  const SplitIndices indices = split_indices(dataset.size(), train_fraction, seed);
  const auto take = [&](const std::vector<Eigen::Index>& rows, const char* suffix) {
    TabularDataset part;
    part.name = dataset.name + suffix;
    part.feature_names = dataset.feature_names;
    part.rows_dropped = dataset.rows_dropped;
    part.source_digest = dataset.source_digest;
    part.x.resize(static_cast<Eigen::Index>(rows.size()), dataset.x.cols());
    part.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      part.x.row(static_cast<Eigen::Index>(i)) = dataset.x.row(rows[i]);
      part.y[static_cast<Eigen::Index>(i)] = dataset.y[rows[i]];
    }
    return part;
  };
  return {take(indices.train, ":train"), take(indices.test, ":test")};
}

}  // namespace gpcp
