#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ndt/scene.hpp"

namespace ndt::test {

/// One region over the whole square, a 2x2 node loop and the given stations.
/// Buildings are left to the caller.
inline Scene square_scene(double size = 500.0, std::vector<Vec3> stations = {{250.0, 250.0, 25.0}}) {
  Scene s;
  s.width = size;
  s.height = size;
  Region r;
  r.id = 0;
  r.name = "all";
  r.bounds = {0.0, 0.0, size, size};
  r.speed_limit = kmh_to_mps(50.0);
  s.regions.push_back(r);
  const double lo = 0.2 * size, hi = 0.8 * size;
  s.roads.nodes = {{0, lo, lo}, {1, hi, lo}, {2, hi, hi}, {3, lo, hi}};
  for (int i = 0; i < 4; ++i) {
    RoadEdge e;
    e.id = i;
    e.node_a = i;
    e.node_b = (i + 1) % 4;
    e.length = hi - lo;
    s.roads.edges.push_back(e);
  }
  s.roads.rebuild_adjacency();
  for (std::size_t i = 0; i < stations.size(); ++i) {
    BaseStation st;
    st.id = static_cast<int>(i);
    st.position = stations[i];
    s.stations.push_back(st);
  }
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("ndt_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ndt::test
