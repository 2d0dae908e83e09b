#include "ndt/simcore.hpp"

#include <algorithm>
#include <cmath>

#include "ndt/errors.hpp"

namespace ndt {

void SimConfig::validate() const {
  if (!(tick > 0)) throw ConfigError("sim.tick must be positive");
  if (!(duration >= 0)) throw ConfigError("sim.duration must be >= 0");
  const double per_sec = 1.0 / tick;
  if (std::abs(per_sec - std::round(per_sec)) > 1e-9)
    throw ConfigError("sim.tick must divide one second evenly");
  const double ticks = duration / tick;
  if (std::abs(ticks - std::round(ticks)) > 1e-6) throw ConfigError("sim.duration must be a multiple of sim.tick");
  if (std::abs(duration - std::round(duration)) > 1e-9) throw ConfigError("sim.duration must be whole seconds");
  if (handover_hysteresis < 0) throw ConfigError("sim.handover_hysteresis must be >= 0");
  if (harq_max_retx < 0) throw ConfigError("sim.harq_max_retx must be >= 0");
  if (!(per_slope > 0)) throw ConfigError("sim.per_slope must be positive");
  if (shadowing_sigma < 0) throw ConfigError("sim.shadowing_sigma must be >= 0");
  if (!(shadowing_decorrelation > 0)) throw ConfigError("sim.shadowing_decorrelation must be positive");
  if (!(scheduler_efficiency > 0)) throw ConfigError("sim.scheduler_efficiency must be positive");
  if (max_queue_packets < 1) throw ConfigError("sim.max_queue_packets must be >= 1");
  if (contention_wait < 0) throw ConfigError("sim.contention_wait must be >= 0");
}

long SimConfig::ticks_per_second() const { return std::lround(1.0 / tick); }
long SimConfig::total_ticks() const { return std::lround(duration / tick); }

std::optional<int> associate(std::span<const double> rsrp_dbm, std::optional<int> current, double hysteresis) {
  int best = -1;
  for (std::size_t c = 0; c < rsrp_dbm.size(); ++c) {
    if (rsrp_dbm[c] <= kNoSignalDb) continue;
    if (best < 0 || rsrp_dbm[c] > rsrp_dbm[best]) best = static_cast<int>(c);
  }
  if (best < 0) return std::nullopt;
  if (!current || *current < 0 || *current >= static_cast<int>(rsrp_dbm.size()) ||
      rsrp_dbm[*current] <= kNoSignalDb)
    return best;
  if (rsrp_dbm[best] > rsrp_dbm[*current] + hysteresis) return best;
  return current;
}

double per_from_sinr(double sinr, const SimConfig& cfg) {
  if (sinr <= kNoSignalDb) return 1.0;
  return 1.0 / (1.0 + std::exp((sinr - cfg.per_midpoint) / cfg.per_slope));
}

std::vector<double> cell_capacity(double background_load, std::span<const double> ue_sinrs, const SimConfig& cfg,
                                  const PropagationConfig& radio) {
  std::vector<double> rates(ue_sinrs.size(), 0.0);
  if (ue_sinrs.empty()) return rates;
  const double share = std::max(0.0, 1.0 - background_load) / static_cast<double>(ue_sinrs.size());
  for (std::size_t i = 0; i < ue_sinrs.size(); ++i) {
    if (ue_sinrs[i] <= kNoSignalDb) continue;
    rates[i] = cfg.scheduler_efficiency * radio.bandwidth * share * std::log2(1.0 + db_to_linear(ue_sinrs[i]));
  }
  return rates;
}

std::vector<CompletedTransmission> serve_queue(std::deque<PendingPacket>& queue, double rate, double t0, double t1,
                                               double& server_time, double& served_bits) {
  std::vector<CompletedTransmission> done;
  double cursor = std::max(server_time, t0);
  while (!queue.empty() && rate > 0) {
    auto& p = queue.front();
    const double start = std::max(cursor, p.created);
    if (start >= t1) break;
    const double available = (t1 - start) * rate;
    if (p.remaining_bits <= available) {
      const double finish = start + p.remaining_bits / rate;
      served_bits += p.remaining_bits;
      done.push_back({p.seq, p.bits, p.created, finish});
      cursor = finish;
      queue.pop_front();
    } else {
      p.remaining_bits -= available;
      served_bits += available;
      cursor = t1;
      break;
    }
  }
  server_time = std::min(cursor, t1);
  return done;
}

Simulator::Simulator(const Scene& scene, ModelConfig cfg)
    : scene_(scene),
      index_(scene),
      cfg_(std::move(cfg)),
      background_(static_cast<int>(scene.stations.size()), cfg_.sim.seed, cfg_.background) {
  cfg_.sim.validate();
  cfg_.radio.validate();
  cfg_.profile.validate();
  world_.mobility_rng = make_stream(cfg_.sim.seed, StreamKind::mobility);
  for (std::size_t c = 0; c < scene.stations.size(); ++c) {
    CellState cell;
    cell.cell_id = scene.stations[c].id;
    world_.cells.push_back(std::move(cell));
    world_.cell_rngs.push_back(make_stream(cfg_.sim.seed, StreamKind::cell, 1000 + c));
  }
}

UeState Simulator::make_ue(Vehicle v) const {
  UeState ue;
  ue.rng = make_stream(cfg_.sim.seed, StreamKind::vehicle, static_cast<std::uint64_t>(v.id));
  const std::size_t cells = scene_.stations.size();
  ue.rx_dbm.assign(cells, kNoSignalDb);
  ue.shadow_db.assign(cells, 0.0);
  ue.los.assign(cells, 0);
  ue.pos = vehicle_position(scene_, v);
  ue.next_arrival = v.spawn_time;
  ue.server_time = v.spawn_time;
  ue.flow.flow_id = v.id;
  ue.flow.ue_id = v.id;
  ue.flow.packet_size = cfg_.flow.packet_size;
  ue.vehicle = std::move(v);
  return ue;
}

void Simulator::add_vehicle(Vehicle v) {
  world_.next_vehicle_id = std::max(world_.next_vehicle_id, v.id + 1);
  auto ue = make_ue(std::move(v));
  auto it = std::lower_bound(world_.ues.begin(), world_.ues.end(), ue.vehicle.id,
                             [](const UeState& u, int id) { return u.vehicle.id < id; });
  world_.ues.insert(it, std::move(ue));
}

void Simulator::retire(UeState&& ue) {
  const long queued = static_cast<long>(ue.queue.size());
  if (on_packet)
    for (const auto& p : ue.queue) on_packet(PacketRecord{ue.flow.flow_id, p.seq, p.bits / 8.0, p.created, {}, 0});
  ue.lost_total += queued;
  ue.window.lost_packets += queued;
  ue.queue.clear();
  world_.retired.push_back(std::move(ue));
}

void Simulator::advance_vehicles(double t0) {
  const double dt = cfg_.sim.tick;
  std::vector<UeState> kept;
  kept.reserve(world_.ues.size());
  for (auto& ue : world_.ues) {
    auto moved = step_vehicle(scene_, ue.vehicle, dt);
    if (!moved) {
      retire(std::move(ue));
      continue;
    }
    ue.vehicle = std::move(*moved);
    ue.pos = vehicle_position(scene_, ue.vehicle);
    kept.push_back(std::move(ue));
  }
  world_.ues = std::move(kept);

  std::vector<Vehicle> current;
  current.reserve(world_.ues.size());
  for (const auto& ue : world_.ues) current.push_back(ue.vehicle);
  auto added = spawn_vehicles(scene_, cfg_.spawn, current, world_.mobility_rng, world_.next_vehicle_id, t0);
  for (auto& v : added) world_.ues.push_back(make_ue(std::move(v)));

  if (trace) {
    for (const auto& ue : world_.ues)
      *trace << t0 << ',' << ue.vehicle.id << ',' << ue.pos.x << ',' << ue.pos.y << ',' << ue.vehicle.speed << ','
             << ue.vehicle.heading << '\n';
  }
}

void Simulator::refresh_links() {
  const auto& sim = cfg_.sim;
  for (auto& ue : world_.ues) {
    const Vec3 rx{ue.pos.x, ue.pos.y, sim.ue_height};
    double rho = 0.0;
    bool draw = true;
    if (ue.last_shadow_pos) {
      const double moved = distance(*ue.last_shadow_pos, ue.pos);
      rho = std::exp(-moved / sim.shadowing_decorrelation);
      draw = moved > 0.0;
    }
    const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho)) * sim.shadowing_sigma;
    for (std::size_t c = 0; c < scene_.stations.size(); ++c) {
      const auto rp = received_power(index_, scene_.stations[c], rx, cfg_.radio);
      if (draw && sim.shadowing_sigma > 0)
        ue.shadow_db[c] = rho * ue.shadow_db[c] + innovation * standard_normal(ue.rng);
      ue.rx_dbm[c] = rp.dbm > kNoSignalDb ? rp.dbm + ue.shadow_db[c] : kNoSignalDb;
      ue.los[c] = rp.los ? 1 : 0;
    }
    ue.last_shadow_pos = ue.pos;
  }
}

void Simulator::update_loads(double t0) {
  for (std::size_t c = 0; c < world_.cells.size(); ++c) {
    const double m = load_multiplier(cfg_.profile, t0 + background_.phase_shift(static_cast<int>(c)),
                                     world_.cell_rngs[c]);
    world_.cells[c].background_load = background_.load(static_cast<int>(c), m);
  }
}

void Simulator::enqueue_packets(double t0, double t1) {
  const double multiplier = anchor_multiplier(cfg_.profile, t0);
  std::vector<Vehicle> vehicles;
  vehicles.reserve(world_.ues.size());
  for (const auto& ue : world_.ues) vehicles.push_back(ue.vehicle);
  const auto flows = active_flows(vehicles, multiplier, cfg_.flow);
  for (std::size_t i = 0; i < world_.ues.size(); ++i) {
    auto& ue = world_.ues[i];
    ue.flow = flows[i];
    const double bits = ue.flow.packet_size * 8.0;
    while (ue.next_arrival < t1) {
      const int seq = ue.next_seq++;
      const double created = ue.next_arrival;
      ue.next_arrival += 1.0 / ue.flow.demand_rate;
      ++ue.tx_total;
      ++ue.window.tx_packets;
      ue.window.tx_bytes += ue.flow.packet_size;
      if (static_cast<int>(ue.queue.size()) >= cfg_.sim.max_queue_packets) {
        ++ue.lost_total;
        ++ue.window.lost_packets;
        if (on_packet) on_packet(PacketRecord{ue.flow.flow_id, seq, ue.flow.packet_size, created, {}, 0});
        continue;
      }
      ue.queue.push_back(PendingPacket{seq, bits, bits, created});
    }
  }
  (void)t0;
}

void Simulator::serve(double t0, double t1) {
  const auto& sim = cfg_.sim;
  const double dt = t1 - t0;
  for (auto& cell : world_.cells) {
    cell.served_bits_this_tick = 0.0;
    cell.capacity_bits_this_tick = 0.0;
    if (cell.attached.empty()) {
      cell.utilization = 0.0;
      continue;
    }
    std::vector<double> sinrs;
    sinrs.reserve(cell.attached.size());
    for (int idx : cell.attached) sinrs.push_back(world_.ues[idx].sinr);
    const auto rates = cell_capacity(cell.background_load, sinrs, sim, cfg_.radio);
    const double share = (1.0 - cell.background_load) / static_cast<double>(cell.attached.size());
    const double contention = sim.contention_wait * cell.background_load / (1.0 - cell.background_load);
    double used = 0.0;
    for (std::size_t k = 0; k < cell.attached.size(); ++k) {
      auto& ue = world_.ues[cell.attached[k]];
      double served = 0.0;
      const auto done = serve_queue(ue.queue, rates[k], t0, t1, ue.server_time, served);
      cell.served_bits_this_tick += served;
      cell.capacity_bits_this_tick += rates[k] * dt;
      if (rates[k] > 0) used += share * (served / rates[k]) / dt;

      const double per = sim.forced_per ? *sim.forced_per : per_from_sinr(ue.sinr, sim);
      for (const auto& tx : done) {
        int retx = 0;
        bool ok = false;
        for (int attempt = 0; attempt <= sim.harq_max_retx; ++attempt) {
          if (uniform01(ue.rng) >= per) {
            ok = true;
            break;
          }
          if (attempt < sim.harq_max_retx) ++retx;
        }
        if (!ok) {
          ++ue.lost_total;
          ++ue.window.lost_packets;
          if (on_packet) on_packet(PacketRecord{ue.flow.flow_id, tx.seq, tx.bits / 8.0, tx.created, {}, retx});
          continue;
        }
        const double delay_ms =
            (tx.finished - tx.created) * 1000.0 + retx * sim.harq_rtt + sim.core_latency + contention;
        ++ue.rx_total;
        ++ue.window.rx_packets;
        ue.window.rx_bits += tx.bits;
        ue.window.delays_ms.push_back(delay_ms);
        if (on_packet)
          on_packet(PacketRecord{ue.flow.flow_id, tx.seq, tx.bits / 8.0, tx.created,
                                 tx.created + delay_ms / 1000.0, retx});
      }
    }
    cell.utilization = std::min(used, 1.0 - cell.background_load);
    if (cell.served_bits_this_tick > cell.capacity_bits_this_tick * (1.0 + 1e-12) + 1e-6)
      ++world_.capacity_violations;
  }
  for (auto& ue : world_.ues) {
    if (!ue.serving) continue;
    ue.window.load_sum += world_.cells[*ue.serving].load();
    ++ue.window.load_ticks;
  }
}

void Simulator::step() {
  const double t0 = static_cast<double>(world_.tick_index) * cfg_.sim.tick;
  const double t1 = static_cast<double>(world_.tick_index + 1) * cfg_.sim.tick;

  advance_vehicles(t0);                                           // (1)
  refresh_links();                                                // (2)
  for (auto& cell : world_.cells) cell.attached.clear();          // (3)
  for (std::size_t i = 0; i < world_.ues.size(); ++i) {
    auto& ue = world_.ues[i];
    ue.serving = associate(ue.rx_dbm, ue.serving, cfg_.sim.handover_hysteresis);
    if (ue.serving) world_.cells[*ue.serving].attached.push_back(static_cast<int>(i));
  }
  update_loads(t0);                                               // (4)
  for (auto& ue : world_.ues) {
    if (!ue.serving) {
      ue.sinr = kNoSignalDb;
      continue;
    }
    double interference = db_to_linear(noise_floor_dbm(cfg_.radio));
    for (std::size_t c = 0; c < world_.cells.size(); ++c)
      if (static_cast<int>(c) != *ue.serving && ue.rx_dbm[c] > kNoSignalDb)
        interference += world_.cells[c].load() * db_to_linear(ue.rx_dbm[c]);
    ue.sinr = ue.rx_dbm[*ue.serving] - 10.0 * std::log10(interference);
  }
  enqueue_packets(t0, t1);                                        // (5)
  serve(t0, t1);                                                  // (6)-(8)

  ++world_.tick_index;
  world_.clock = t1;
}

void Simulator::run(const std::function<void(std::span<const SampleRow>)>& on_sample) {
  const long total = cfg_.sim.total_ticks();
  const long per_second = cfg_.sim.ticks_per_second();
  while (world_.tick_index < total) {
    step();
    if (world_.tick_index % per_second == 0) {
      const auto rows = sample(world_, world_.tick_index / per_second);
      if (on_sample) on_sample(rows);
    }
  }
}

std::vector<int> Simulator::conservation_violations() const {
  std::vector<int> bad;
  auto check = [&](const UeState& ue) {
    if (ue.tx_total != ue.rx_total + ue.lost_total + static_cast<long>(ue.queue.size()))
      bad.push_back(ue.vehicle.id);
  };
  for (const auto& ue : world_.ues) check(ue);
  for (const auto& ue : world_.retired) check(ue);
  return bad;
}

}  // namespace ndt
