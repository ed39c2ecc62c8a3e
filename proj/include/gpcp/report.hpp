#pragma once

// Report emission. JSON carries full fidelity (every record with its
// bootstrap sample list, the resolved config echo, RNG id); CSV is one row
// per record; Markdown renders the paper-style grid with best-width and
// best-correlation cells marked under the soft-coverage condition.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gpcp/experiment.hpp"

namespace gpcp {

namespace detail {

inline std::string format_double(double value, const char* spec = "%.10g") {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), spec, value);
  return buffer;
}

inline json record_to_json(const EvalRecord& record, bool with_samples) {
  json node;
  node["method"] = method_name(record.method);
  node["nu"] = record.nu;
  if (record.beta_power)
    node["beta"] = *record.beta_power;
  else
    node["beta"] = nullptr;
  node["alpha"] = record.alpha;
  node["coverage"] = record.coverage;
  if (std::isfinite(record.avg_width))
    node["avg_width"] = record.avg_width;
  else
    node["avg_width"] = nullptr;
  node["width_infinite_count"] = record.width_infinite_count;
  if (record.spearman_median) {
    json spearman;
    spearman["median"] = *record.spearman_median;
    spearman["ci_lower"] = record.spearman_ci.first;
    spearman["ci_upper"] = record.spearman_ci.second;
    spearman["degenerate_count"] = record.spearman_degenerate_count;
    if (with_samples) spearman["samples"] = record.spearman_samples;
    node["spearman"] = spearman;
  } else {
    node["spearman"] = nullptr;
  }
  node["q2"] = record.q2;
  node["mse"] = record.mse;
  node["passes_soft_threshold"] = record.passes_soft_threshold;
  return node;
}

}  // namespace detail

inline json report_to_json(const EvalReport& report) {
  json root;
  root["schema"] = "gpcp-report/1";
  root["timestamp"] = report.timestamp;
  root["library_version"] = report.library_version;
  root["rng"] = report.rng_id;
  root["config"] = report.config_echo;

  json dataset;
  dataset["name"] = report.dataset_name;
  dataset["n_train"] = report.n_train;
  dataset["n_test"] = report.n_test;
  dataset["rows_dropped"] = report.rows_dropped;
  {
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(report.source_digest));
    dataset["source_digest"] = std::string(digest);
  }
  dataset["standardization"] = report.standardization;
  root["dataset"] = dataset;

  root["loo_mode"] = report.config_echo.at("loo_mode");
  root["nugget_mode"] = report.config_echo.at("nugget_mode");
  root["delta"] = report.config_echo.at("delta");

  json thresholds = json::array();
  for (const SelectionSummary& summary : report.selections) {
    json node;
    node["alpha"] = summary.alpha;
    node["threshold"] = summary.threshold;
    thresholds.push_back(node);
  }
  root["soft_thresholds"] = thresholds;

  json models = json::array();
  for (const GpModelSummary& model : report.models) {
    json node;
    node["nu"] = model.nu;
    node["failed"] = model.failed;
    if (model.failed) {
      node["error"] = model.error;
    } else {
      node["sigma2"] = model.sigma2;
      node["theta"] = model.theta;
      node["nll"] = model.nll;
      node["jitter"] = model.jitter;
      node["q2"] = model.q2;
      node["mse"] = model.mse;
    }
    models.push_back(node);
  }
  root["models"] = models;

  json records = json::array();
  for (const EvalRecord& record : report.records)
    records.push_back(detail::record_to_json(record, /*with_samples=*/true));
  root["records"] = records;

  json selections = json::array();
  for (const SelectionSummary& summary : report.selections) {
    json node;
    node["alpha"] = summary.alpha;
    node["threshold"] = summary.threshold;
    node["min_width"] = summary.selection.min_width
                            ? detail::record_to_json(*summary.selection.min_width, false)
                            : json(nullptr);
    node["max_spearman"] =
        summary.selection.max_spearman
            ? detail::record_to_json(*summary.selection.max_spearman, false)
            : json(nullptr);
    if (!summary.selection.min_width && !summary.selection.max_spearman)
      node["note"] = "no method passes the soft threshold at this level";
    selections.push_back(node);
  }
  root["selection"] = selections;
  return root;
}

inline std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "method,nu,beta,alpha,coverage,avg_width,width_infinite_count,"
         "spearman_median,spearman_ci_lower,spearman_ci_upper,"
         "spearman_degenerate_count,q2,mse,passes_soft_threshold\n";
  for (const EvalRecord& record : report.records) {
    out << method_name(record.method) << ',' << detail::format_double(record.nu) << ',';
    if (record.beta_power) out << detail::format_double(*record.beta_power);
    out << ',' << detail::format_double(record.alpha) << ','
        << detail::format_double(record.coverage) << ',';
    if (std::isfinite(record.avg_width)) out << detail::format_double(record.avg_width);
    out << ',' << record.width_infinite_count << ',';
    if (record.spearman_median) {
      out << detail::format_double(*record.spearman_median) << ','
          << detail::format_double(record.spearman_ci.first) << ','
          << detail::format_double(record.spearman_ci.second);
    } else {
      out << ",,";
    }
    out << ',' << record.spearman_degenerate_count << ','
        << detail::format_double(record.q2) << ',' << detail::format_double(record.mse)
        << ',' << (record.passes_soft_threshold ? 1 : 0) << '\n';
  }
  return out.str();
}

namespace detail {

struct MarkdownKey {
  Method method;
  double nu;
  std::optional<double> beta;
  bool operator<(const MarkdownKey& other) const {
    if (method != other.method) return method < other.method;
    if (nu != other.nu) return nu < other.nu;
    const double a = beta.value_or(-1.0);
    const double b = other.beta.value_or(-1.0);
    return a < b;
  }
  bool operator==(const MarkdownKey& other) const {
    return method == other.method && nu == other.nu &&
           beta.value_or(-1.0) == other.beta.value_or(-1.0);
  }
};

inline bool record_is(const EvalRecord& record, const SelectionSummary& summary,
                      const std::optional<EvalRecord>& winner) {
  if (!winner) return false;
  return record.alpha == summary.alpha && record.method == winner->method &&
         record.nu == winner->nu &&
         record.beta_power.value_or(-1.0) == winner->beta_power.value_or(-1.0);
}

}  // namespace detail

inline std::string report_to_markdown(const EvalReport& report) {
  std::ostringstream out;
  out << "# Metamodel interval report: " << report.dataset_name << "\n\n";
  out << "- n_train: " << report.n_train << ", n_test: " << report.n_test;
  if (report.rows_dropped > 0) out << ", rows dropped at load: " << report.rows_dropped;
  out << "\n";
  out << "- loo_mode: " << report.config_echo.at("loo_mode").get<std::string>()
      << ", nugget_mode: " << report.config_echo.at("nugget_mode").get<std::string>()
      << ", delta: " << detail::format_double(report.config_echo.at("delta").get<double>())
      << "\n";
  out << "- rng: " << report.rng_id << ", library: " << report.library_version << "\n\n";

  out << "## GP models\n\n";
  out << "| Matern nu | Q2 | MSE | sigma2 | status |\n";
  out << "|---|---|---|---|---|\n";
  for (const GpModelSummary& model : report.models) {
    out << "| " << detail::format_double(model.nu, "%g") << " | ";
    if (model.failed) {
      out << "n.c | n.c | n.c | failed: " << model.error << " |\n";
    } else {
      out << detail::format_double(model.q2, "%.3f") << " | "
          << detail::format_double(model.mse, "%.4g") << " | "
          << detail::format_double(model.sigma2, "%.4g") << " | ok |\n";
    }
  }
  out << "\n";

  // Soft thresholds.
  out << "## Soft coverage thresholds\n\n";
  out << "| level | threshold |\n|---|---|\n";
  for (const SelectionSummary& summary : report.selections)
    out << "| " << detail::format_double(100.0 * (1.0 - summary.alpha), "%g") << "% | "
        << detail::format_double(summary.threshold, "%.3f") << " |\n";
  out << "\n";

  // Row keys in record order, deduplicated.
  std::vector<detail::MarkdownKey> keys;
  for (const EvalRecord& record : report.records) {
    const detail::MarkdownKey key{record.method, record.nu, record.beta_power};
    bool seen = false;
    for (const auto& existing : keys)
      if (existing == key) {
        seen = true;
        break;
      }
    if (!seen) keys.push_back(key);
  }

  const auto find_record = [&](const detail::MarkdownKey& key,
                               double alpha) -> const EvalRecord* {
    for (const EvalRecord& record : report.records)
      if (record.method == key.method && record.nu == key.nu && record.alpha == alpha &&
          record.beta_power.value_or(-1.0) == key.beta.value_or(-1.0))
        return &record;
    return nullptr;
  };

  std::vector<double> alphas;
  for (const SelectionSummary& summary : report.selections) alphas.push_back(summary.alpha);

  out << "## Intervals\n\n";
  out << "| Method | Matern | beta |";
  for (double alpha : alphas)
    out << " Cov " << detail::format_double(100.0 * (1.0 - alpha), "%g") << "% |";
  for (double alpha : alphas)
    out << " Width " << detail::format_double(100.0 * (1.0 - alpha), "%g") << "% |";
  for (double alpha : alphas)
    out << " Spearman " << detail::format_double(100.0 * (1.0 - alpha), "%g") << "% |";
  out << " Passes |\n";
  out << "|---|---|---|";
  for (std::size_t i = 0; i < 3 * alphas.size(); ++i) out << "---|";
  out << "---|\n";

  for (const auto& key : keys) {
    out << "| " << method_name(key.method) << " | "
        << detail::format_double(key.nu, "%g") << " | ";
    if (key.beta) out << detail::format_double(*key.beta, "%g");
    out << " |";
    for (double alpha : alphas) {
      const EvalRecord* record = find_record(key, alpha);
      out << ' ' << (record ? detail::format_double(record->coverage, "%.3f") : "-") << " |";
    }
    for (double alpha : alphas) {
      const EvalRecord* record = find_record(key, alpha);
      if (!record) {
        out << " - |";
        continue;
      }
      std::string cell = std::isfinite(record->avg_width)
                             ? detail::format_double(record->avg_width, "%.3f")
                             : "inf";
      if (record->width_infinite_count > 0 && std::isfinite(record->avg_width))
        cell += " (" + std::to_string(record->width_infinite_count) + " inf)";
      for (const SelectionSummary& summary : report.selections)
        if (summary.alpha == alpha &&
            detail::record_is(*record, summary, summary.selection.min_width))
          cell = "**" + cell + "**";
      out << ' ' << cell << " |";
    }
    for (double alpha : alphas) {
      const EvalRecord* record = find_record(key, alpha);
      if (!record) {
        out << " - |";
        continue;
      }
      std::string cell = record->spearman_median
                             ? detail::format_double(*record->spearman_median, "%.3f")
                             : "n.c";
      for (const SelectionSummary& summary : report.selections)
        if (summary.alpha == alpha &&
            detail::record_is(*record, summary, summary.selection.max_spearman))
          cell = "**" + cell + "**";
      out << ' ' << cell << " |";
    }
    std::string passes;
    for (double alpha : alphas) {
      const EvalRecord* record = find_record(key, alpha);
      if (record && record->passes_soft_threshold) {
        if (!passes.empty()) passes += ",";
        passes += detail::format_double(100.0 * (1.0 - alpha), "%g");
      }
    }
    out << ' ' << (passes.empty() ? "none" : passes) << " |\n";
  }
  out << "\n";

  for (const SelectionSummary& summary : report.selections) {
    if (!summary.selection.min_width && !summary.selection.max_spearman) {
      out << "_no method passes the soft threshold at "
          << detail::format_double(100.0 * (1.0 - summary.alpha), "%g") << "%_\n";
    }
  }
  out << "\nBold width: smallest average width among records passing the soft "
         "coverage threshold at that level. Bold Spearman: highest median "
         "width-error correlation among passing records. n.c: not computable.\n";
  return out.str();
}

// Writes the requested formats into out_dir; returns the paths written.
inline std::vector<std::string> emit_report(const EvalReport& report,
                                            const std::vector<std::string>& formats,
                                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (const std::string& format : formats) {
    std::string path;
    std::string payload;
    if (format == "json") {
      path = (fs::path(out_dir) / "report.json").string();
      payload = report_to_json(report).dump(2) + "\n";
    } else if (format == "csv") {
      path = (fs::path(out_dir) / "report.csv").string();
      payload = report_to_csv(report);
    } else if (format == "md") {
      path = (fs::path(out_dir) / "report.md").string();
      payload = report_to_markdown(report);
    } else {
      throw std::invalid_argument("emit_report: unknown format '" + format + "'");
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("emit_report: cannot write " + path);
    file << payload;
    if (!file) throw std::runtime_error("emit_report: write failed for " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace gpcp
