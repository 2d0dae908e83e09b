#include "ndt/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ndt {

using ojson = nlohmann::ordered_json;

void RoadGraph::rebuild_adjacency() {
  adjacency.assign(nodes.size(), {});
  for (const auto& e : edges) {
    if (e.node_a >= 0 && e.node_a < static_cast<int>(nodes.size())) adjacency[e.node_a].push_back(e.id);
    if (e.node_b >= 0 && e.node_b < static_cast<int>(nodes.size()) && e.node_b != e.node_a)
      adjacency[e.node_b].push_back(e.id);
  }
}

int Scene::region_index(int region_id) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].id == region_id) return static_cast<int>(i);
  return -1;
}

int Scene::region_at(double x, double y) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].bounds.contains(x, y)) return static_cast<int>(i);
  return -1;
}

const Region& Scene::edge_region(int edge_id) const {
  return regions[region_index(roads.edges[edge_id].region_id)];
}

std::vector<Region> default_regions(double width, double height) {
  auto band = [&](double x0, double x1) { return Rect{x0 * width, 0.0, x1 * width, height}; };
  return {
      Region{0, "core", band(0.4, 0.8), 0.5, 0.5, kmh_to_mps(30.0)},
      Region{1, "west_belt", band(0.2, 0.4), 0.2, 0.2, kmh_to_mps(50.0)},
      Region{2, "east_belt", band(0.8, 1.0), 0.2, 0.2, kmh_to_mps(70.0)},
      Region{3, "periphery", band(0.0, 0.2), 0.1, 0.1, kmh_to_mps(100.0)},
  };
}

namespace {

std::vector<double> street_lines(int count, double spacing, double extent) {
  const double offset = (extent - (count - 1) * spacing) / 2.0;
  std::vector<double> lines(count);
  for (int i = 0; i < count; ++i) lines[i] = offset + i * spacing;
  return lines;
}

// Lot intervals along one axis: the strips between consecutive street lines
// and between the outer streets and the scene border, each split in two.
std::vector<std::pair<double, double>> lot_intervals(const std::vector<double>& lines, double extent,
                                                     double setback) {
  constexpr double kAlley = 4.0;
  constexpr double kMinLot = 6.0;
  std::vector<double> cuts;
  cuts.push_back(0.0 - setback);
  for (double l : lines) cuts.push_back(l);
  cuts.push_back(extent + setback);

  std::vector<std::pair<double, double>> lots;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = std::max(cuts[i] + setback, 1.0);
    const double hi = std::min(cuts[i + 1] - setback, extent - 1.0);
    const double span = hi - lo;
    if (span < kMinLot) continue;
    if (span >= 2 * kMinLot + kAlley) {
      const double mid = (lo + hi) / 2.0;
      lots.emplace_back(lo, mid - kAlley / 2.0);
      lots.emplace_back(mid + kAlley / 2.0, hi);
    } else {
      lots.emplace_back(lo, hi);
    }
  }
  return lots;
}

const Building* building_containing(const std::vector<Building>& buildings, double x, double y, double z) {
  for (const auto& b : buildings)
    if (b.footprint.contains(x, y) && z <= b.height) return &b;
  return nullptr;
}

}  // namespace

Scene generate_scene(const SceneParams& p, std::uint64_t seed) {
  if (p.width <= 0 || p.height <= 0) throw ConfigError("scene bounds must be positive");
  if (p.grid_x < 2 || p.grid_y < 2) throw ConfigError("scene grid must be at least 2x2");
  if (p.station_count < 1) throw ConfigError("scene needs at least one station");
  if (p.block_size <= 0) throw ConfigError("block_size must be positive");
  if (p.block_size * (p.grid_x - 1) > p.width || p.block_size * (p.grid_y - 1) > p.height)
    throw ConfigError("block_size exceeds scene bounds for the requested grid");
  if (p.building_density < 0 || p.building_density > 1)
    throw ConfigError("building_density must lie in [0, 1]");
  if (p.min_building_height <= 0 || p.max_building_height < p.min_building_height)
    throw ConfigError("building height range is invalid");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scene scene;
  scene.width = p.width;
  scene.height = p.height;
  scene.regions = p.regions.empty() ? default_regions(p.width, p.height) : p.regions;

  const auto xs = street_lines(p.grid_x, p.block_size, p.width);
  const auto ys = street_lines(p.grid_y, p.block_size, p.height);

  auto& roads = scene.roads;
  for (int j = 0; j < p.grid_y; ++j)
    for (int i = 0; i < p.grid_x; ++i)
      roads.nodes.push_back(RoadNode{j * p.grid_x + i, xs[i], ys[j]});

  auto add_edge = [&](int a, int b) {
    RoadEdge e;
    e.id = static_cast<int>(roads.edges.size());
    e.node_a = a;
    e.node_b = b;
    e.length = distance(roads.node_pos(a), roads.node_pos(b));
    const Vec2 mid{(roads.nodes[a].x + roads.nodes[b].x) / 2.0, (roads.nodes[a].y + roads.nodes[b].y) / 2.0};
    const int r = scene.region_at(mid.x, mid.y);
    e.region_id = r >= 0 ? scene.regions[r].id : scene.regions.front().id;
    roads.edges.push_back(e);
  };
  for (int j = 0; j < p.grid_y; ++j)
    for (int i = 0; i + 1 < p.grid_x; ++i) add_edge(j * p.grid_x + i, j * p.grid_x + i + 1);
  for (int j = 0; j + 1 < p.grid_y; ++j)
    for (int i = 0; i < p.grid_x; ++i) add_edge(j * p.grid_x + i, (j + 1) * p.grid_x + i);
  roads.rebuild_adjacency();

  const auto lots_x = lot_intervals(xs, p.width, p.street_setback);
  const auto lots_y = lot_intervals(ys, p.height, p.street_setback);
  for (const auto& [y0, y1] : lots_y) {
    for (const auto& [x0, x1] : lots_x) {
      const bool present = unit(rng) < p.building_density;
      const double h = p.min_building_height + unit(rng) * (p.max_building_height - p.min_building_height);
      if (!present) continue;
      scene.buildings.push_back(
          Building{static_cast<int>(scene.buildings.size()), Rect{x0, y0, x1, y1}, h});
    }
  }

  // Jittered lattice with roughly square cells.
  const int n = p.station_count;
  const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(n * p.width / p.height))));
  const int rows = (n + cols - 1) / cols;
  const double cell_w = p.width / cols;
  const double cell_h = p.height / rows;
  for (int k = 0; k < n; ++k) {
    const int r = k / cols;
    const int c = k % cols;
    const double cx = (c + 0.5) * cell_w;
    const double cy = (r + 0.5) * cell_h;
    Vec3 pos{cx, cy, p.station_height};
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const double x = std::clamp(cx + (unit(rng) - 0.5) * 0.5 * cell_w, 1.0, p.width - 1.0);
      const double y = std::clamp(cy + (unit(rng) - 0.5) * 0.5 * cell_h, 1.0, p.height - 1.0);
      if (!building_containing(scene.buildings, x, y, p.station_height)) {
        pos = {x, y, p.station_height};
        placed = true;
      }
    }
    if (!placed) {
      // Fall back to the nearest intersection, which is never inside a footprint.
      const auto& nodes = roads.nodes;
      const auto nearest = std::min_element(nodes.begin(), nodes.end(), [&](const auto& a, const auto& b) {
        return std::hypot(a.x - cx, a.y - cy) < std::hypot(b.x - cx, b.y - cy);
      });
      pos = {nearest->x, nearest->y, p.station_height};
    }
    scene.stations.push_back(BaseStation{k, pos, p.tx_power, p.antenna_gain});
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::string fmt_path(const char* base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

// Exact rectangle cover test by coordinate compression.
bool regions_cover(const Scene& s) {
  std::set<double> xs{0.0, s.width};
  std::set<double> ys{0.0, s.height};
  for (const auto& r : s.regions) {
    for (double x : {r.bounds.min_x, r.bounds.max_x})
      if (x > 0 && x < s.width) xs.insert(x);
    for (double y : {r.bounds.min_y, r.bounds.max_y})
      if (y > 0 && y < s.height) ys.insert(y);
  }
  const std::vector<double> vx(xs.begin(), xs.end());
  const std::vector<double> vy(ys.begin(), ys.end());
  for (std::size_t i = 0; i + 1 < vx.size(); ++i)
    for (std::size_t j = 0; j + 1 < vy.size(); ++j)
      if (s.region_at((vx[i] + vx[i + 1]) / 2, (vy[j] + vy[j + 1]) / 2) < 0) return false;
  return true;
}

}  // namespace

ValidationReport validate_scene(const Scene& s) {
  ValidationReport out;
  auto add = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };
  const Rect bounds = s.bounds();

  if (!(s.width > 0 && s.height > 0)) add("bounds", "width and height must be positive");

  std::set<int> building_ids;
  for (std::size_t i = 0; i < s.buildings.size(); ++i) {
    const auto& b = s.buildings[i];
    const auto path = fmt_path("buildings", i);
    const auto& f = b.footprint;
    if (!building_ids.insert(b.id).second) add(path, "duplicate building id " + std::to_string(b.id));
    if (!(f.min_x < f.max_x) || !(f.min_y < f.max_y))
      add(path, "building " + std::to_string(b.id) + " has an empty footprint");
    if (!(b.height > 0)) add(path, "building " + std::to_string(b.id) + " height must be positive");
    if (!bounds.contains(f.min_x, f.min_y) || !bounds.contains(f.max_x, f.max_y))
      add(path, "building " + std::to_string(b.id) + " footprint leaves scene bounds");
  }

  std::set<int> region_ids;
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    const auto& r = s.regions[i];
    const auto path = fmt_path("regions", i);
    const std::string rid = "region " + std::to_string(r.id);
    if (!region_ids.insert(r.id).second) add(path, "duplicate " + rid);
    if (!(r.spawn_weight >= 0)) add(path + ".spawn_weight", rid + " spawn_weight must be >= 0");
    if (!(r.route_weight > 0)) add(path + ".route_weight", rid + " route_weight must be > 0");
    if (!(r.speed_limit >= kMinSpeedLimit - 1e-9 && r.speed_limit <= kMaxSpeedLimit + 1e-9))
      add(path + ".speed_limit", rid + " speed limit outside 30-100 km/h");
    if (!(r.bounds.min_x < r.bounds.max_x && r.bounds.min_y < r.bounds.max_y))
      add(path + ".bounds", rid + " has empty bounds");
  }
  if (s.regions.empty()) {
    add("regions", "scene has no regions");
  } else {
    if (!regions_cover(s)) add("regions", "region rectangles do not cover the scene bounds");
    bool any_spawn = false;
    for (const auto& r : s.regions) any_spawn |= r.spawn_weight > 0;
    if (!any_spawn) add("regions", "all spawn weights are zero");
  }

  const auto& g = s.roads;
  const int n_nodes = static_cast<int>(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& nd = g.nodes[i];
    const auto path = fmt_path("roads.nodes", i);
    if (nd.id != static_cast<int>(i)) add(path, "node id " + std::to_string(nd.id) + " must equal its index");
    if (!bounds.contains(nd.x, nd.y)) add(path, "node " + std::to_string(nd.id) + " outside scene bounds");
    for (const auto& b : s.buildings)
      if (b.footprint.contains(nd.x, nd.y))
        add(path, "node " + std::to_string(nd.id) + " lies inside building " + std::to_string(b.id));
  }
  bool edges_ok = true;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    const auto path = fmt_path("roads.edges", i);
    const std::string eid = "edge " + std::to_string(e.id);
    if (e.id != static_cast<int>(i)) add(path, eid + " id must equal its index");
    if (e.node_a < 0 || e.node_a >= n_nodes || e.node_b < 0 || e.node_b >= n_nodes) {
      add(path, eid + " references a missing node");
      edges_ok = false;
      continue;
    }
    if (e.node_a == e.node_b) add(path, eid + " is a self-loop");
    const double d = distance(g.node_pos(e.node_a), g.node_pos(e.node_b));
    if (std::abs(d - e.length) > 1e-6) {
      std::ostringstream msg;
      msg << eid << " length " << e.length << " differs from node distance " << d;
      add(path + ".length", msg.str());
    }
    if (s.region_index(e.region_id) < 0) add(path + ".region", eid + " references missing region " +
                                                                   std::to_string(e.region_id));
  }
  if (n_nodes == 0) add("roads.nodes", "road graph has no nodes");
  if (edges_ok && n_nodes > 0) {
    // Edges are bidirectional, so strong connectivity reduces to BFS reachability.
    std::vector<std::vector<int>> adj(n_nodes);
    for (const auto& e : g.edges) {
      adj[e.node_a].push_back(e.node_b);
      adj[e.node_b].push_back(e.node_a);
    }
    std::vector<char> seen(n_nodes, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          q.push(v);
        }
    }
    if (reached != n_nodes)
      add("roads", "road graph is disconnected: " + std::to_string(n_nodes - reached) + " node(s) unreachable");
  }

  for (std::size_t i = 0; i < s.stations.size(); ++i) {
    const auto& st = s.stations[i];
    const auto path = fmt_path("stations", i);
    const std::string sid = "station " + std::to_string(st.id);
    if (st.id != static_cast<int>(i)) add(path, sid + " id must equal its index");
    if (!(st.position.z > 0)) add(path + ".z", sid + " antenna height must be positive");
    if (!bounds.contains(st.position.x, st.position.y)) add(path, sid + " outside scene bounds");
    if (const auto* b = building_containing(s.buildings, st.position.x, st.position.y, st.position.z))
      add(path, sid + " lies inside building " + std::to_string(b->id));
  }
  if (s.stations.empty()) add("stations", "scene has no base stations");
  return out;
}

SceneInvariantError::SceneInvariantError(ValidationReport report)
    : SchemaError([&] {
        std::string msg = "scene violates " + std::to_string(report.size()) + " invariant(s):";
        for (const auto& v : report) msg += "\n  " + v.path + ": " + v.message;
        return msg;
      }()),
      report_(std::move(report)) {}

// ---------------------------------------------------------------------------
// Serialization

std::string scene_to_json(const Scene& s) {
  ojson doc;
  doc["bounds"] = {{"width", s.width}, {"height", s.height}};
  doc["buildings"] = ojson::array();
  for (const auto& b : s.buildings)
    doc["buildings"].push_back({{"id", b.id},
                                {"min_x", b.footprint.min_x},
                                {"min_y", b.footprint.min_y},
                                {"max_x", b.footprint.max_x},
                                {"max_y", b.footprint.max_y},
                                {"height", b.height}});
  doc["regions"] = ojson::array();
  for (const auto& r : s.regions)
    doc["regions"].push_back({{"id", r.id},
                              {"name", r.name},
                              {"min_x", r.bounds.min_x},
                              {"min_y", r.bounds.min_y},
                              {"max_x", r.bounds.max_x},
                              {"max_y", r.bounds.max_y},
                              {"spawn_weight", r.spawn_weight},
                              {"route_weight", r.route_weight},
                              {"speed_limit_mps", r.speed_limit}});
  ojson nodes = ojson::array();
  for (const auto& nd : s.roads.nodes) nodes.push_back({{"id", nd.id}, {"x", nd.x}, {"y", nd.y}});
  ojson edges = ojson::array();
  for (const auto& e : s.roads.edges)
    edges.push_back(
        {{"id", e.id}, {"a", e.node_a}, {"b", e.node_b}, {"length", e.length}, {"region", e.region_id}});
  doc["roads"] = {{"nodes", nodes}, {"edges", edges}};
  doc["stations"] = ojson::array();
  for (const auto& st : s.stations)
    doc["stations"].push_back({{"id", st.id},
                               {"x", st.position.x},
                               {"y", st.position.y},
                               {"z", st.position.z},
                               {"tx_power_dbm", st.tx_power},
                               {"antenna_gain_dbi", st.antenna_gain}});
  return doc.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw SchemaError(std::string("scene file is not valid JSON: ") + e.what());
  }
  std::string where;
  try {
    Scene s;
    where = "bounds";
    s.width = doc.at("bounds").at("width").get<double>();
    s.height = doc.at("bounds").at("height").get<double>();
    where = "buildings";
    for (const auto& b : doc.at("buildings"))
      s.buildings.push_back(Building{b.at("id").get<int>(),
                                     Rect{b.at("min_x").get<double>(), b.at("min_y").get<double>(),
                                          b.at("max_x").get<double>(), b.at("max_y").get<double>()},
                                     b.at("height").get<double>()});
    where = "regions";
    for (const auto& r : doc.at("regions"))
      s.regions.push_back(Region{r.at("id").get<int>(), r.value("name", std::string{}),
                                 Rect{r.at("min_x").get<double>(), r.at("min_y").get<double>(),
                                      r.at("max_x").get<double>(), r.at("max_y").get<double>()},
                                 r.at("spawn_weight").get<double>(), r.at("route_weight").get<double>(),
                                 r.at("speed_limit_mps").get<double>()});
    where = "roads.nodes";
    for (const auto& nd : doc.at("roads").at("nodes"))
      s.roads.nodes.push_back(RoadNode{nd.at("id").get<int>(), nd.at("x").get<double>(), nd.at("y").get<double>()});
    where = "roads.edges";
    for (const auto& e : doc.at("roads").at("edges"))
      s.roads.edges.push_back(RoadEdge{e.at("id").get<int>(), e.at("a").get<int>(), e.at("b").get<int>(),
                                       e.at("length").get<double>(), e.at("region").get<int>()});
    where = "stations";
    for (const auto& st : doc.at("stations"))
      s.stations.push_back(BaseStation{st.at("id").get<int>(),
                                       Vec3{st.at("x").get<double>(), st.at("y").get<double>(),
                                            st.at("z").get<double>()},
                                       st.value("tx_power_dbm", 30.0), st.value("antenna_gain_dbi", 0.0)});
    s.roads.rebuild_adjacency();
    return s;
  } catch (const ojson::exception& e) {
    throw SchemaError("scene file: bad or missing field under '" + where + "': " + e.what());
  }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << scene_to_json(scene);
  if (!out) throw IoError("failed writing " + path.string());
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Scene s = scene_from_json(buf.str());
  auto report = validate_scene(s);
  if (!report.empty()) throw SceneInvariantError(std::move(report));
  return s;
}

bool operator==(const Scene& a, const Scene& b) { return scene_to_json(a) == scene_to_json(b); }

}  // namespace ndt
