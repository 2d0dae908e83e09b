#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ndt/mobility.hpp"
#include "ndt/monitor.hpp"
#include "ndt/propagation.hpp"
#include "ndt/rng.hpp"
#include "ndt/scene.hpp"
#include "ndt/traffic.hpp"

namespace ndt {

struct SimConfig {
  double tick = 0.1;           // s
  double duration = 86400.0;   // s
  std::uint64_t seed = 1;
  double handover_hysteresis = 3.0;  // dB
  double core_latency = 5.0;         // ms
  int harq_max_retx = 3;
  double harq_rtt = 8.0;             // ms
  double scheduler_efficiency = 0.75;
  double shadowing_sigma = 4.0;          // dB
  double shadowing_decorrelation = 50.0; // m
  double per_midpoint = 2.0;             // dB
  double per_slope = 1.5;                // dB
  int max_queue_packets = 500;           // drop-tail buffer per flow
  double ue_height = 1.5;                // m
  /// Mean wait behind background traffic, contention_wait * rho / (1 - rho)
  /// with rho the serving cell's background load. 0 disables it.
  double contention_wait = 0.0;          // ms
  std::optional<double> forced_per;      // test hook: bypasses the SINR mapping

  void validate() const;
  long ticks_per_second() const;
  long total_ticks() const;
};

/// Everything a simulation run needs besides the scene.
struct ModelConfig {
  PropagationConfig radio;
  SimConfig sim;
  DiurnalProfile profile = DiurnalProfile::standard();
  BackgroundConfig background;
  FlowConfig flow;
  SpawnModel spawn;
};

struct PendingPacket {
  int seq = 0;
  double bits = 0.0;
  double remaining_bits = 0.0;
  double created = 0.0;  // s
};

struct CompletedTransmission {
  int seq = 0;
  double bits = 0.0;
  double created = 0.0;
  double finished = 0.0;  // s, end of the first transmission attempt
};

struct PacketRecord {
  int flow_id = 0;
  int seq = 0;
  double size = 0.0;  // bytes
  double created = 0.0;
  std::optional<double> delivered;  // s; nullopt when lost
  int retx_count = 0;
};

/// Per-UE (one vehicle, one flow) state.
struct UeState {
  Vehicle vehicle;
  Rng rng;
  Vec2 pos;
  std::optional<Vec2> last_shadow_pos;
  std::optional<int> serving;
  std::vector<double> rx_dbm;   // shadowed received power per cell
  std::vector<double> shadow_db;
  std::vector<char> los;
  double sinr = kNoSignalDb;

  FlowSpec flow;
  std::deque<PendingPacket> queue;
  double server_time = 0.0;
  double next_arrival = 0.0;
  int next_seq = 0;
  long tx_total = 0;
  long rx_total = 0;
  long lost_total = 0;
  WindowAccumulator window;
};

struct CellState {
  int cell_id = 0;
  double background_load = 0.0;
  std::vector<int> attached;  // indices into WorldState::ues, ascending vehicle id
  double served_bits_this_tick = 0.0;
  double capacity_bits_this_tick = 0.0;
  double utilization = 0.0;  // resource fraction used by attached UEs last tick

  double load() const { return std::min(1.0, background_load + utilization); }
};

struct WorldState {
  long tick_index = 0;
  double clock = 0.0;
  std::vector<UeState> ues;      // ascending vehicle id
  std::vector<UeState> retired;  // despawned during the current window
  std::vector<CellState> cells;
  int next_vehicle_id = 0;
  Rng mobility_rng;
  std::vector<Rng> cell_rngs;
  long capacity_violations = 0;
};

/// Serving cell after applying the hysteresis rule; nullopt when every link is at the sentinel.
std::optional<int> associate(std::span<const double> rsrp_dbm, std::optional<int> current, double hysteresis);

double per_from_sinr(double sinr, const SimConfig& cfg);

/// Equal time-share service rates in bit/s, one per entry of `ue_sinrs`.
std::vector<double> cell_capacity(double background_load, std::span<const double> ue_sinrs, const SimConfig& cfg,
                                  const PropagationConfig& radio);

/// Work-conserving FIFO service of `queue` at constant `rate` over [t0, t1).
/// Partially served packets keep their remaining bits. `server_time` is
/// updated to the instant the server becomes idle or t1.
std::vector<CompletedTransmission> serve_queue(std::deque<PendingPacket>& queue, double rate, double t0, double t1,
                                               double& server_time, double& served_bits);

/// Drives the tick loop over a fixed scene.
class Simulator {
 public:
  Simulator(const Scene& scene, ModelConfig cfg);

  const WorldState& world() const { return world_; }
  WorldState& world() { return world_; }
  const ModelConfig& config() const { return cfg_; }
  const Scene& scene() const { return scene_; }

  /// Inserts a vehicle directly (for controlled scenarios). Keeps id ordering.
  void add_vehicle(Vehicle v);

  /// Advances one tick. Every delivered or lost packet is reported to `on_packet` when set.
  void step();

  /// Runs to cfg.sim.duration, calling `on_sample` at every whole second.
  void run(const std::function<void(std::span<const SampleRow>)>& on_sample);

  /// Flows whose cumulative tx != rx + lost + queued right now.
  std::vector<int> conservation_violations() const;

  std::function<void(const PacketRecord&)> on_packet;
  /// Optional per-tick mobility trace (CSV: time, vehicle id, x, y, speed, heading).
  std::ostream* trace = nullptr;

 private:
  UeState make_ue(Vehicle v) const;
  void advance_vehicles(double t0);
  void refresh_links();
  void update_loads(double t0);
  void enqueue_packets(double t0, double t1);
  void serve(double t0, double t1);
  void retire(UeState&& ue);

  const Scene& scene_;
  BuildingIndex index_;
  ModelConfig cfg_;
  BackgroundLoad background_;
  WorldState world_;
};

}  // namespace ndt
