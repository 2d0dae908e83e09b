#pragma once

#include <optional>
#include <vector>

#include "ndt/rng.hpp"
#include "ndt/scene.hpp"

namespace ndt {

/// One traversal of an undirected road edge; forward means node_a -> node_b.
struct RouteStep {
  int edge_id = 0;
  bool forward = true;

  friend bool operator==(const RouteStep&, const RouteStep&) = default;
};

struct Vehicle {
  int id = 0;
  std::vector<RouteStep> route;
  std::size_t cursor = 0;  // index of the edge currently driven
  double offset = 0.0;     // m from the entry node of the current edge
  double speed = 0.0;      // m/s
  double speed_factor = 1.0;
  double heading = 0.0;    // degrees counter-clockwise from +x, [0, 360)
  double spawn_time = 0.0;

  const RouteStep& step() const { return route[cursor]; }
  int edge_id() const { return route[cursor].edge_id; }
};

struct SpawnModel {
  int target_population = 0;
  double speed_jitter = 0.1;
  int route_length = 40;
};

/// Ground position of a vehicle on its current edge.
Vec2 vehicle_position(const Scene& scene, const Vehicle& v);
double edge_heading(const Scene& scene, const RouteStep& step);
/// Region limit scaled by the vehicle's jitter factor, never above the limit.
double edge_speed(const Scene& scene, int edge_id, double speed_factor);

/// Probabilities of each outgoing edge at `node` having arrived via `entry_edge`
/// (-1 for none). U-turns are excluded unless the node is a dead end.
std::vector<std::pair<int, double>> next_edge_probabilities(const Scene& scene, int node, int entry_edge);

std::vector<RouteStep> plan_route(const Scene& scene, int start_node, Rng& rng, int max_edges = 40);

/// New vehicles that bring `current` up to the target population. Ids start at `next_id`.
std::vector<Vehicle> spawn_vehicles(const Scene& scene, const SpawnModel& model, const std::vector<Vehicle>& current,
                                    Rng& rng, int& next_id, double now);

/// Region index chosen for a spawn, exposed for testing the spawn distribution.
int draw_spawn_region(const Scene& scene, Rng& rng);

/// Advances the vehicle by dt. Returns nullopt once the route is exhausted.
std::optional<Vehicle> step_vehicle(const Scene& scene, Vehicle v, double dt);

}  // namespace ndt
