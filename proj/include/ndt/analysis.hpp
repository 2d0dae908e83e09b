#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ndt/monitor.hpp"

namespace ndt {

struct CorrelationMatrix {
  std::vector<std::string> features;
  /// values[i][j]; nullopt where undefined (constant column or < 2 paired rows).
  std::vector<std::vector<std::optional<double>>> values;

  std::optional<double> at(std::string_view a, std::string_view b) const;
};

/// Pearson r over rows where both values are present; nullopt when undefined.
std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y);

/// Throws SchemaError for names outside the dataset schema.
CorrelationMatrix pearson_matrix(std::span<const SampleRow> rows, const std::vector<std::string>& features);

/// Radio, traffic, packet-level and end-to-end columns.
std::vector<std::string> default_correlation_features();

struct SignConstraint {
  std::string a;
  std::string b;
  int sign;  // +1 or -1
};

/// Expected signs between radio quality, load, packet errors and latency.
std::vector<SignConstraint> expected_correlation_signs();

struct CellLatencySummary {
  int cell_id = 0;
  int hour = 0;
  std::size_t count = 0;
  double p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0;
  double mean = 0, std = 0;
};

/// Linear-interpolation quantile of sorted data (R type 7); q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Per-cell latency distribution of rows within +/- window_minutes of hour:00
/// (time of day, wrapping at midnight). Cells without samples are omitted.
std::vector<CellLatencySummary> cell_latency_summary(std::span<const SampleRow> rows, int hour,
                                                     double window_minutes = 30.0);

struct DiurnalRow {
  int hour = 0;
  std::size_t count = 0;
  std::optional<double> mean_load;
  std::optional<double> mean_latency_ms;
  std::optional<double> mean_throughput_bps;
};

std::vector<DiurnalRow> diurnal_summary(std::span<const SampleRow> rows);

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path);
void write_cell_summary_csv(std::span<const CellLatencySummary> rows, const std::filesystem::path& path);
void write_diurnal_csv(std::span<const DiurnalRow> rows, const std::filesystem::path& path);
/// Box-and-whisker approximation of per-cell violins: box p25-p75, whiskers p5-p95, tick at p50.
void write_latency_svg(std::span<const CellLatencySummary> rows, const std::string& title,
                       const std::filesystem::path& path, const std::vector<std::string>& comments = {});

}  // namespace ndt
