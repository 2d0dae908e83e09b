#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ndt/monitor.hpp"
#include "ndt/rng.hpp"

namespace ndt {

/// Fixed feature order of an example. Window means unless noted.
inline constexpr std::array<std::string_view, 15> kFeatureNames{
    "cell_load",  "speed_mps",  "tx_pkts",   "rx_pkts",        "per",     "avg_pkt_bytes", "latency_mean_ms",
    "latency_std_ms", "jitter_ms", "throughput_bps", "sinr_db", "rsrp_dbm", "los_fraction", "hour_sin",
    "hour_cos"};
inline constexpr std::size_t kLatencyMeanFeature = 6;
inline constexpr std::size_t kLatencyStdFeature = 7;

struct HourlyExample {
  int cell_id = 0;
  long time = 0;  // anchor t
  std::vector<double> features;
  std::array<double, 2> target{};  // (mean_ms, std_ms)
  long feature_last_time = 0;      // latest row time used by the features
  long target_first_time = 0;      // earliest row time used by the target
  std::size_t target_samples = 0;
};

struct ExampleConfig {
  long window = 300;
  long stride = 60;
  long horizon = 3600;
  std::size_t min_target_samples = 10;

  void validate() const;
};

struct ExampleSet {
  std::vector<HourlyExample> examples;
  std::string diagnostic;  // why the set is empty or thinned; empty when nothing to report
  std::size_t dropped_sparse_target = 0;
  std::size_t dropped_no_feature_latency = 0;
};

/// Sliding-window examples per serving cell. Features aggregate (t - window, t];
/// the target is the latency (mean, population std) over
/// (t + horizon - window/2, t + horizon + window/2]. Anchors lie on multiples of
/// stride. Anchors without any latency in the feature window are dropped, since
/// the naive predictor is undefined there.
ExampleSet build_examples(std::span<const SampleRow> rows, const ExampleConfig& cfg = {});

/// Throws std::logic_error when an example reads rows at or after its target window.
void check_no_leakage(const HourlyExample& ex, long horizon, long window);

struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population std, 1 where the column is constant

  static Normalizer fit(const Eigen::MatrixXd& data);  // one sample per column
  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& data) const;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

/// Fully connected network; ReLU on hidden layers, identity output. Samples are columns.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, Rng& rng);  // He-uniform hidden weights; zero output weights and biases

  const std::vector<int>& sizes() const { return sizes_; }
  std::vector<Eigen::MatrixXd>& weights() { return w_; }
  std::vector<Eigen::VectorXd>& biases() { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  /// Mean over samples and outputs of the squared error, no dropout.
  double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) const;
  /// Loss and its gradient. Inverted dropout on hidden activations when rate > 0.
  double backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, MlpGradients& grad, double dropout = 0.0,
                  Rng* rng = nullptr) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

class Adam {
 public:
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Mlp& net, const MlpGradients& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  MlpGradients m_, v_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 50;
  int patience = 5;
  double min_delta = 1e-5;
  double dropout = 0.2;
  std::vector<int> hidden{256, 128};
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool cell_one_hot = false;  // global model only

  void validate() const;
};

/// A trained network with the normalization fitted on its training examples.
struct TrainedModel {
  int cell_id = -1;  // -1 for the pooled model
  std::vector<int> one_hot_cells;  // non-empty when cell identity is an input
  Mlp net;
  Normalizer x_norm;
  Normalizer y_norm;
  std::vector<double> loss_history;
  std::string config_hash;

  /// (mean_ms, std_ms) with std clamped at 0.
  std::array<double, 2> predict(const HourlyExample& ex) const;
};

/// Naive persistence: the current window's latency (mean, std).
std::array<double, 2> predict_naive(const HourlyExample& ex);

/// Trains on every example given. stream_id selects the training RNG stream.
/// Throws ConfigError with fewer than batch_size examples.
TrainedModel train(std::span<const HourlyExample> examples, const TrainConfig& cfg, std::uint64_t stream_id,
                   std::vector<int> one_hot_cells = {});

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// Chronological split at a single time cutoff shared by all predictors:
/// examples before the cutoff train, the rest test.
long split_cutoff(std::span<const HourlyExample> examples, double train_fraction);

struct CellReport {
  int cell_id = 0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  bool local_fallback = false;  // too few examples; local predictions are naive
  std::array<double, 3> mse{};       // naive, global, local; normalized, both targets
  std::array<double, 3> mse_mean_ms2{};  // naive, global, local; raw ms^2, mean target only
};

struct ExperimentReport {
  std::size_t examples = 0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  long cutoff_time = 0;
  std::array<double, 3> mse{};
  std::array<double, 3> mse_mean_ms2{};
  /// Absolute error of the predicted mean (ms), quantiles 5/25/50/75/95 per predictor.
  std::array<std::array<double, 5>, 3> abs_error_quantiles{};
  std::vector<CellReport> cells;
  std::vector<int> fallback_cells;
  std::string diagnostic;
};

inline constexpr std::array<std::string_view, 3> kPredictorNames{"naive", "global", "local"};

struct ExperimentOutput {
  ExperimentReport report;
  std::optional<TrainedModel> global;
  std::map<int, TrainedModel> local;
};

ExperimentOutput run_experiment(std::span<const HourlyExample> examples, const TrainConfig& cfg);

void write_report_json(const ExperimentReport& report, const std::filesystem::path& path);
void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace ndt
