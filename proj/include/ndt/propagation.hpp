#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ndt/geometry.hpp"
#include "ndt/scene.hpp"

namespace ndt {

inline constexpr double kSpeedOfLight = 299792458.0;
/// Stand-in for -infinity in dB/dBm fields (no propagation path).
inline constexpr double kNoSignalDb = -200.0;

struct PropagationConfig {
  double carrier_freq = 3.5e9;             // Hz
  double bandwidth = 20e6;                 // Hz
  double noise_figure = 9.0;               // dB
  double thermal_noise_density = -174.0;   // dBm/Hz
  double reflection_loss = 6.0;            // dB per bounce
  int max_reflections = 1;                 // 0 or 1
  double nlos_excess_exponent = 1.4;
  double nlos_excess_loss = 15.0;          // dB, flat term of the diffraction surrogate
  bool diffraction_surrogate = true;

  void validate() const;
};

enum class PathKind { direct, reflected };

struct RayPath {
  PathKind kind = PathKind::direct;
  double length = 0.0;  // m
  double gain = 0.0;    // dB, <= 0
};

struct LinkState {
  double rsrp = kNoSignalDb;  // dBm
  double sinr = kNoSignalDb;  // dB
  bool los = false;
  double serving_distance = 0.0;  // 3D, m
};

/// Free-space path loss in dB; distances below 1 m are evaluated at 1 m so gains stay <= 0.
double fspl_db(double distance_m, double freq_hz);
double noise_floor_dbm(const PropagationConfig& cfg);

double db_to_linear(double db);
double linear_to_db(double lin);

bool los_blocked(const Scene& scene, const Vec3& a, const Vec3& b);

/// Uniform ground-plane grid over building footprints. blocked() returns the
/// same answer as los_blocked() but only tests buildings in cells the segment
/// crosses. Holds a reference to the scene.
class BuildingIndex {
 public:
  explicit BuildingIndex(const Scene& scene, double cell_size = 20.0);

  const Scene& scene() const { return *scene_; }
  bool blocked(const Vec3& a, const Vec3& b) const;

  /// Vertical building faces in building order, faces 0:-x, 1:+x, 2:-y, 3:+y.
  struct Face {
    double plane = 0.0;  // x for faces 0/1, y for faces 2/3
    double lat_lo = 0.0, lat_hi = 0.0;
    double height = 0.0;
    double sign = 0.0;  // outward normal direction along the plane axis
    bool along_x = false;
  };
  const std::vector<Face>& faces() const { return faces_; }
  /// Faces whose outward side contains tx; precomputed for station positions.
  std::span<const Face> faces_facing(const Vec3& tx) const;

 private:
  const Scene* scene_;
  double cell_;
  double x0_ = 0.0, y0_ = 0.0, x1_ = 0.0, y1_ = 0.0;  // grid bounds
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> cells_;
  std::vector<Face> faces_;
  std::vector<std::vector<Face>> station_faces_;  // parallel to scene.stations
};

std::vector<RayPath> trace_paths(const Scene& scene, const Vec3& tx, const Vec3& rx, const PropagationConfig& cfg);
std::vector<RayPath> trace_paths(const BuildingIndex& index, const Vec3& tx, const Vec3& rx,
                                 const PropagationConfig& cfg);

/// Received power from one station, before interference. The building block
/// shared by link_state and the simulator's per-tick link refresh.
struct ReceivedPower {
  double dbm = kNoSignalDb;
  bool los = false;
};

ReceivedPower received_power(const Scene& scene, const BaseStation& station, const Vec3& rx,
                             const PropagationConfig& cfg);
ReceivedPower received_power(const BuildingIndex& index, const BaseStation& station, const Vec3& rx,
                             const PropagationConfig& cfg);

/// SINR in dB from powers already in dBm; interferers given as (power dBm, activity factor).
double sinr_db(double signal_dbm, std::span<const std::pair<double, double>> interferers,
               const PropagationConfig& cfg);

struct Interferer {
  BaseStation station;
  double load = 0.0;  // activity factor in [0, 1]
};

LinkState link_state(const Scene& scene, const BaseStation& serving, const Vec3& ue_pos,
                     std::span<const Interferer> interferers, const PropagationConfig& cfg);

/// Best-server RSRP grid. Row 0 is the southmost row (smallest y).
struct Heatmap {
  int cols = 0;
  int rows = 0;
  double resolution = 1.0;
  std::vector<double> rsrp;  // row-major

  double at(int row, int col) const { return rsrp[static_cast<std::size_t>(row) * cols + col]; }
};

Heatmap heatmap(const Scene& scene, const PropagationConfig& cfg, double resolution, double rx_height);

/// Plain-text grid, one row per line with the northmost row first; leading '#' lines carry metadata.
void write_heatmap_text(const Heatmap& map, const std::filesystem::path& path,
                        const std::vector<std::string>& header_comments = {});
/// Binary PPM (P6), north up. Buildings gray, streets black, stations white.
void write_heatmap_ppm(const Heatmap& map, const Scene& scene, const std::filesystem::path& path,
                       const std::vector<std::string>& header_comments = {});

struct Rgb {
  unsigned char r, g, b;
};
/// Piecewise-linear ramp over [-120, -40] dBm: navy, blue, cyan, yellow, red.
Rgb dbm_color(double dbm);

}  // namespace ndt
