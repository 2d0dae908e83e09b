#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ndt/predict.hpp"
#include "ndt/scene.hpp"
#include "ndt/simcore.hpp"

namespace ndt {

std::string tool_version();

struct AnalysisConfig {
  std::vector<int> hours{11, 23};
  double window_minutes = 30.0;
};

struct HeatmapConfig {
  double resolution = 5.0;  // m
  double rx_height = 1.5;   // m
};

struct BenchConfig {
  std::vector<int> vehicles{100, 200, 400};
  std::vector<int> stations{6, 12, 24};
  int fixed_vehicles = 100;  // for the station sweep
  int fixed_stations = 12;   // for the vehicle sweep
  double duration = 60.0;    // s of simulated time per point
  int repeats = 1;           // best of n
};

/// Everything one invocation needs. A single seed drives scene generation,
/// simulation and training.
struct RunConfig {
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> scene_path;  // otherwise generated from `scene`
  SceneParams scene;
  ModelConfig model;
  ExampleConfig examples;
  TrainConfig train;
  AnalysisConfig analysis;
  HeatmapConfig heatmap;
  BenchConfig bench;
  bool write_trace = false;
  std::filesystem::path out = "out";

  int vehicles() const { return model.spawn.target_population; }
  /// Copies the seed into every component and validates. Throws ConfigError.
  void finalize();
};

/// Parses a JSON config; unknown keys and wrong types raise ConfigError naming the field path.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON of the effective configuration (output directory excluded).
std::string config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

Scene build_scene(const RunConfig& cfg);

struct SimulateResult {
  std::size_t rows = 0;
  double wall_seconds = 0.0;
  long conservation_violations = 0;
  long capacity_violations = 0;
  std::filesystem::path dataset;
};

struct AnalyzeResult {
  std::size_t rows = 0;
  int sign_failures = 0;  // expected-sign constraints violated or undefined
};

struct PredictResult {
  ExperimentReport report;
  std::size_t examples = 0;
};

struct BenchPoint {
  int vehicles = 0;
  int stations = 0;
  double seconds = 0.0;
};

struct BenchResult {
  std::vector<BenchPoint> vehicle_sweep;
  std::vector<BenchPoint> station_sweep;
  std::optional<double> vehicle_exponent;
  std::optional<double> station_exponent;
};

/// Least-squares slope of log(seconds) against log(x); absent with fewer than
/// two points of distinct positive x.
std::optional<double> loglog_slope(const std::vector<std::pair<double, double>>& xy);

/// Each command writes into cfg.out and records its artifacts in run_metadata.json.
void cmd_scene(const RunConfig& cfg);
SimulateResult cmd_simulate(const RunConfig& cfg);
void cmd_heatmap(const RunConfig& cfg);
AnalyzeResult cmd_analyze(const RunConfig& cfg, const std::filesystem::path& dataset);
PredictResult cmd_predict(const RunConfig& cfg, const std::filesystem::path& dataset);
/// scene, simulate, heatmap, analyze, predict into one directory.
void cmd_pipeline(const RunConfig& cfg);
BenchResult cmd_bench(const RunConfig& cfg);

/// Files cmd_pipeline is documented to produce, relative to the output directory.
std::vector<std::string> pipeline_artifacts();

}  // namespace ndt
