#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ndt/mobility.hpp"
#include "ndt/rng.hpp"

namespace ndt {

inline constexpr double kSecondsPerDay = 86400.0;

struct DiurnalProfile {
  std::array<double, 24> hourly{};
  double noise_sigma = 0.1;

  static DiurnalProfile standard();
  void validate() const;
};

/// Hourly anchor JSON object {"0": m0, ..., "23": m23}; noise_sigma stays at its default.
DiurnalProfile load_profile(const std::filesystem::path& path);

/// Piecewise-linear interpolation of the hourly anchors, wrapping at midnight.
double anchor_multiplier(const DiurnalProfile& profile, double t);

/// Anchor value with multiplicative Gaussian noise, clamped to [0, 1].
double load_multiplier(const DiurnalProfile& profile, double t, Rng& rng);

struct BackgroundConfig {
  double cell_peak = 0.7;
  double factor_min = 0.8;
  double factor_max = 1.2;
  /// Each cell's diurnal curve is shifted in time by a static offset drawn
  /// from [-max, max] hours. 0 keeps every cell on the shared clock.
  double phase_shift_max_hours = 0.0;

  void validate() const;
};

/// Per-cell background load. Each cell gets a static factor drawn once per run.
class BackgroundLoad {
 public:
  BackgroundLoad(int cell_count, std::uint64_t seed, BackgroundConfig cfg = {});
  /// Uses explicit factors instead of drawing them.
  BackgroundLoad(std::vector<double> factors, BackgroundConfig cfg = {});

  double factor(int cell) const { return factors_[cell]; }
  /// Seconds added to the clock before reading the profile for this cell.
  double phase_shift(int cell) const { return shifts_.empty() ? 0.0 : shifts_[cell]; }
  int cell_count() const { return static_cast<int>(factors_.size()); }
  /// multiplier x peak x cell factor, kept below 1.
  double load(int cell, double multiplier) const;

 private:
  std::vector<double> factors_;
  std::vector<double> shifts_;
  BackgroundConfig cfg_;
};

struct FlowConfig {
  double packet_size = 1200.0;  // bytes
  double nominal_rate = 50.0;   // packets/s
  double min_rate_fraction = 0.2;
  bool scale_with_load = true;
};

struct FlowSpec {
  int flow_id = 0;
  int ue_id = 0;
  double packet_size = 1200.0;
  double demand_rate = 50.0;
  double start = 0.0;
  double end = 0.0;
};

/// One flow per vehicle; flow id equals the vehicle id for the vehicle's lifetime.
std::vector<FlowSpec> active_flows(const std::vector<Vehicle>& vehicles, double multiplier, const FlowConfig& cfg);

}  // namespace ndt
