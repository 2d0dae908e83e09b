#include "ndt/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "ndt/errors.hpp"

namespace ndt {

DiurnalProfile DiurnalProfile::standard() {
  DiurnalProfile p;
  p.hourly = {0.20, 0.15, 0.12, 0.10, 0.12, 0.25, 0.50, 0.85, 1.00, 0.80, 0.65, 0.60,
              0.65, 0.60, 0.60, 0.65, 0.80, 1.00, 0.90, 0.70, 0.55, 0.45, 0.35, 0.25};
  return p;
}

void DiurnalProfile::validate() const {
  double peak = 0.0;
  for (std::size_t h = 0; h < hourly.size(); ++h) {
    if (!(hourly[h] >= 0.0 && hourly[h] <= 1.0))
      throw ConfigError("profile.hourly[" + std::to_string(h) + "] outside [0, 1]");
    peak = std::max(peak, hourly[h]);
  }
  if (peak != 1.0) throw ConfigError("profile must reach 1.0 at its peak hour");
  if (noise_sigma < 0) throw ConfigError("profile.noise_sigma must be >= 0");
}

DiurnalProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("profile " + path.string() + ": " + e.what());
  }
  DiurnalProfile p = DiurnalProfile::standard();
  for (int h = 0; h < 24; ++h) {
    const auto key = std::to_string(h);
    if (!doc.contains(key) || !doc[key].is_number()) throw SchemaError("profile is missing hour " + key);
    p.hourly[h] = doc[key].get<double>();
  }
  p.validate();
  return p;
}

double anchor_multiplier(const DiurnalProfile& profile, double t) {
  const double hours = std::fmod(std::fmod(t, kSecondsPerDay) + kSecondsPerDay, kSecondsPerDay) / 3600.0;
  const int h0 = std::min(23, static_cast<int>(std::floor(hours)));
  const int h1 = (h0 + 1) % 24;
  const double frac = hours - h0;
  return profile.hourly[h0] + frac * (profile.hourly[h1] - profile.hourly[h0]);
}

double load_multiplier(const DiurnalProfile& profile, double t, Rng& rng) {
  const double base = anchor_multiplier(profile, t);
  if (profile.noise_sigma == 0.0) return base;
  return std::clamp(base * (1.0 + profile.noise_sigma * standard_normal(rng)), 0.0, 1.0);
}

void BackgroundConfig::validate() const {
  if (!(cell_peak >= 0 && cell_peak <= 1)) throw ConfigError("background.cell_peak must lie in [0, 1]");
  if (!(factor_min > 0 && factor_min <= factor_max)) throw ConfigError("background factors need 0 < min <= max");
  if (!(phase_shift_max_hours >= 0 && phase_shift_max_hours <= 12))
    throw ConfigError("background.phase_shift_max_hours must lie in [0, 12]");
}

BackgroundLoad::BackgroundLoad(int cell_count, std::uint64_t seed, BackgroundConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  factors_.reserve(cell_count);
  for (int c = 0; c < cell_count; ++c) {
    Rng rng = make_stream(seed, StreamKind::cell, static_cast<std::uint64_t>(c));
    factors_.push_back(cfg.factor_min + uniform01(rng) * (cfg.factor_max - cfg.factor_min));
    if (cfg.phase_shift_max_hours > 0)
      shifts_.push_back((2.0 * uniform01(rng) - 1.0) * cfg.phase_shift_max_hours * 3600.0);
  }
}

BackgroundLoad::BackgroundLoad(std::vector<double> factors, BackgroundConfig cfg)
    : factors_(std::move(factors)), cfg_(cfg) {}

double BackgroundLoad::load(int cell, double multiplier) const {
  // Capped just below 1 so a cell never loses all residual capacity.
  return std::clamp(multiplier * cfg_.cell_peak * factors_[cell], 0.0, 0.999);
}

std::vector<FlowSpec> active_flows(const std::vector<Vehicle>& vehicles, double multiplier, const FlowConfig& cfg) {
  const double scale = cfg.scale_with_load ? std::max(cfg.min_rate_fraction, multiplier) : 1.0;
  std::vector<FlowSpec> flows;
  flows.reserve(vehicles.size());
  for (const auto& v : vehicles)
    flows.push_back(FlowSpec{v.id, v.id, cfg.packet_size, cfg.nominal_rate * scale, v.spawn_time,
                             std::numeric_limits<double>::infinity()});
  return flows;
}

}  // namespace ndt
