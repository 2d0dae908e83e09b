#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ndt/errors.hpp"
#include "ndt/geometry.hpp"

namespace ndt {

inline constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }
inline constexpr double kMinSpeedLimit = 30.0 / 3.6;
inline constexpr double kMaxSpeedLimit = 100.0 / 3.6;

struct Building {
  int id = 0;
  Rect footprint;
  double height = 0.0;

  Box box() const { return Box{footprint, height}; }
};

struct Region {
  int id = 0;
  std::string name;
  Rect bounds;
  double spawn_weight = 1.0;
  double route_weight = 1.0;
  double speed_limit = kMinSpeedLimit;  // m/s
};

struct RoadNode {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Undirected street segment; vehicles may traverse it in either direction.
struct RoadEdge {
  int id = 0;
  int node_a = 0;
  int node_b = 0;
  double length = 0.0;
  int region_id = 0;

  int other(int node) const { return node == node_a ? node_b : node_a; }
};

struct RoadGraph {
  std::vector<RoadNode> nodes;
  std::vector<RoadEdge> edges;
  /// Per node, ids of incident edges. Rebuilt by rebuild_adjacency().
  std::vector<std::vector<int>> adjacency;

  void rebuild_adjacency();
  Vec2 node_pos(int node) const { return {nodes[node].x, nodes[node].y}; }
};

struct BaseStation {
  int id = 0;
  Vec3 position;
  double tx_power = 30.0;    // dBm
  double antenna_gain = 0.0; // dBi
};

struct Scene {
  double width = 500.0;
  double height = 500.0;
  std::vector<Building> buildings;
  RoadGraph roads;
  std::vector<Region> regions;
  std::vector<BaseStation> stations;

  Rect bounds() const { return {0.0, 0.0, width, height}; }
  /// Index into `regions` for a region id; -1 when absent.
  int region_index(int region_id) const;
  /// First region (in list order) whose rectangle contains the point; -1 when none.
  int region_at(double x, double y) const;
  const Region& edge_region(int edge_id) const;
};

struct SceneParams {
  double width = 500.0;
  double height = 500.0;
  int grid_x = 6;  // intersections along x
  int grid_y = 6;
  double block_size = 90.0;  // street spacing, m
  double building_density = 0.7;
  double street_setback = 8.0;  // building face distance from street centerline
  double min_building_height = 8.0;
  double max_building_height = 30.0;
  int station_count = 12;
  double station_height = 25.0;
  double tx_power = 30.0;
  double antenna_gain = 0.0;
  /// Empty means the default four-band layout over the bounds.
  std::vector<Region> regions;
};

/// Four bands across x: periphery, west belt, core, east belt.
std::vector<Region> default_regions(double width, double height);

Scene generate_scene(const SceneParams& params, std::uint64_t seed);

struct Violation {
  std::string path;  // e.g. "roads.edges[3]"
  std::string message;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_scene(const Scene& scene);

/// Thrown by load_scene when the document parses but breaks invariants.
class SceneInvariantError : public SchemaError {
 public:
  explicit SceneInvariantError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

std::string scene_to_json(const Scene& scene);
/// Parses without validating. Throws SchemaError on malformed documents.
Scene scene_from_json(const std::string& text);

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

bool operator==(const Scene& a, const Scene& b);

}  // namespace ndt
