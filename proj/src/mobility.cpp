#include "ndt/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ndt {

namespace {

int entry_node(const Scene& scene, const RouteStep& s) {
  const auto& e = scene.roads.edges[s.edge_id];
  return s.forward ? e.node_a : e.node_b;
}

int exit_node(const Scene& scene, const RouteStep& s) {
  const auto& e = scene.roads.edges[s.edge_id];
  return s.forward ? e.node_b : e.node_a;
}

template <class Items>
std::size_t weighted_pick(const Items& items, Rng& rng) {
  double total = 0.0;
  for (const auto& [_, w] : items) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < items.size(); ++i) {
    u -= items[i].second;
    if (u < 0) return i;
  }
  return items.size() - 1;
}

}  // namespace

Vec2 vehicle_position(const Scene& scene, const Vehicle& v) {
  const auto& s = v.step();
  const Vec2 a = scene.roads.node_pos(entry_node(scene, s));
  const Vec2 b = scene.roads.node_pos(exit_node(scene, s));
  const double len = scene.roads.edges[s.edge_id].length;
  const double t = len > 0 ? v.offset / len : 0.0;
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

double edge_heading(const Scene& scene, const RouteStep& s) {
  const Vec2 a = scene.roads.node_pos(entry_node(scene, s));
  const Vec2 b = scene.roads.node_pos(exit_node(scene, s));
  double deg = std::atan2(b.y - a.y, b.x - a.x) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

double edge_speed(const Scene& scene, int edge_id, double speed_factor) {
  const double limit = scene.edge_region(edge_id).speed_limit;
  return std::clamp(limit * speed_factor, 0.0, limit);
}

std::vector<std::pair<int, double>> next_edge_probabilities(const Scene& scene, int node, int entry_edge) {
  std::vector<std::pair<int, double>> out;
  for (int eid : scene.roads.adjacency[node])
    if (eid != entry_edge) out.emplace_back(eid, scene.edge_region(eid).route_weight);
  if (out.empty() && entry_edge >= 0) out.emplace_back(entry_edge, 1.0);
  double total = 0.0;
  for (const auto& [_, w] : out) total += w;
  for (auto& [_, w] : out) w /= total;
  return out;
}

std::vector<RouteStep> plan_route(const Scene& scene, int start_node, Rng& rng, int max_edges) {
  std::vector<RouteStep> route;
  int node = start_node;
  int entry = -1;
  for (int k = 0; k < max_edges; ++k) {
    const auto choices = next_edge_probabilities(scene, node, entry);
    if (choices.empty()) break;
    const int eid = choices[weighted_pick(choices, rng)].first;
    const auto& e = scene.roads.edges[eid];
    const bool forward = e.node_a == node;
    route.push_back({eid, forward});
    node = forward ? e.node_b : e.node_a;
    entry = eid;
  }
  return route;
}

int draw_spawn_region(const Scene& scene, Rng& rng) {
  std::vector<std::pair<int, double>> regions;
  std::vector<char> has_node(scene.regions.size(), 0);
  for (const auto& nd : scene.roads.nodes) {
    const int r = scene.region_at(nd.x, nd.y);
    if (r >= 0) has_node[r] = 1;
  }
  for (std::size_t i = 0; i < scene.regions.size(); ++i)
    if (has_node[i] && scene.regions[i].spawn_weight > 0)
      regions.emplace_back(static_cast<int>(i), scene.regions[i].spawn_weight);
  if (regions.empty()) return -1;
  return regions[weighted_pick(regions, rng)].first;
}

std::vector<Vehicle> spawn_vehicles(const Scene& scene, const SpawnModel& model, const std::vector<Vehicle>& current,
                                    Rng& rng, int& next_id, double now) {
  std::vector<Vehicle> added;
  const int missing = model.target_population - static_cast<int>(current.size());
  for (int k = 0; k < missing; ++k) {
    const int region = draw_spawn_region(scene, rng);
    if (region < 0) break;
    std::vector<int> nodes;
    for (const auto& nd : scene.roads.nodes)
      if (scene.region_at(nd.x, nd.y) == region) nodes.push_back(nd.id);
    const int start = nodes[std::min(nodes.size() - 1, static_cast<std::size_t>(uniform01(rng) * nodes.size()))];
    Vehicle v;
    v.route = plan_route(scene, start, rng, model.route_length);
    v.speed_factor = 1.0 + (2.0 * uniform01(rng) - 1.0) * model.speed_jitter;
    if (v.route.empty()) continue;
    v.id = next_id++;
    v.spawn_time = now;
    v.speed = edge_speed(scene, v.edge_id(), v.speed_factor);
    v.heading = edge_heading(scene, v.step());
    added.push_back(std::move(v));
  }
  return added;
}

std::optional<Vehicle> step_vehicle(const Scene& scene, Vehicle v, double dt) {
  v.offset += v.speed * dt;
  while (v.offset > scene.roads.edges[v.edge_id()].length) {
    v.offset -= scene.roads.edges[v.edge_id()].length;
    if (++v.cursor >= v.route.size()) return std::nullopt;
    v.speed = edge_speed(scene, v.edge_id(), v.speed_factor);
    v.heading = edge_heading(scene, v.step());
  }
  return v;
}

}  // namespace ndt
