#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ndt {

struct WorldState;

/// Per-flow counters for the current 1 s window. Reset at every sampling instant.
struct WindowAccumulator {
  long tx_packets = 0;
  double tx_bytes = 0.0;
  long rx_packets = 0;
  double rx_bits = 0.0;
  long lost_packets = 0;
  std::vector<double> delays_ms;  // delivery order
  double load_sum = 0.0;          // serving-cell load summed over ticks
  int load_ticks = 0;

  void reset() { *this = WindowAccumulator{}; }
};

/// One dataset row. Column order matches dataset_columns().
struct SampleRow {
  long time = 0;  // s, end of the window (t-1, t]
  int hour = 0;
  int flow_id = 0;
  int ue_id = 0;
  int cell_id = -1;  // -1 when out of coverage
  double pos_x = 0.0;
  double pos_y = 0.0;
  double speed = 0.0;
  double heading = 0.0;
  double cell_load = 0.0;
  long tx_pkts = 0;
  long rx_pkts = 0;
  double per = 0.0;
  double avg_pkt_bytes = 0.0;
  std::optional<double> latency_ms;  // absent when nothing was delivered
  double jitter_ms = 0.0;
  double throughput_bps = 0.0;
  double sinr_db = 0.0;
  double rsrp_dbm = 0.0;
  int los = 0;

  friend bool operator==(const SampleRow&, const SampleRow&) = default;
};

inline constexpr std::array<std::string_view, 20> kDatasetColumns{
    "time_s",   "hour",      "flow_id",    "ue_id",          "cell_id", "pos_x_m",  "pos_y_m",
    "speed_mps", "heading_deg", "cell_load", "tx_pkts",       "rx_pkts", "per",      "avg_pkt_bytes",
    "latency_ms", "jitter_ms", "throughput_bps", "sinr_db",   "rsrp_dbm", "los"};

/// Mean absolute difference of consecutive delays; 0 with fewer than two.
double jitter(std::span<const double> delays_ms);

/// Rows for every flow active during the window ending at t. Resets the window accumulators.
std::vector<SampleRow> sample(WorldState& world, long t);

std::string format_row(const SampleRow& row);
std::string dataset_header();

/// Streams rows to `<path>.partial` and renames on finish(); an unfinished
/// writer deletes its partial file.
class DatasetWriter {
 public:
  explicit DatasetWriter(std::filesystem::path path);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void write(const SampleRow& row);
  /// Flushes, renames into place and returns the row count.
  std::size_t finish();

 private:
  std::filesystem::path path_;
  std::filesystem::path partial_;
  std::ofstream out_;
  std::size_t rows_ = 0;
  bool done_ = false;
};

std::size_t write_dataset(std::span<const SampleRow> rows, const std::filesystem::path& path);

}  // namespace ndt
