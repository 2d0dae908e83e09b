#include "ndt/propagation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace ndt {

void PropagationConfig::validate() const {
  if (!(carrier_freq > 0)) throw ConfigError("radio.carrier_freq must be positive");
  if (!(bandwidth > 0)) throw ConfigError("radio.bandwidth must be positive");
  if (max_reflections != 0 && max_reflections != 1) throw ConfigError("radio.max_reflections must be 0 or 1");
  if (reflection_loss < 0) throw ConfigError("radio.reflection_loss must be >= 0");
  if (nlos_excess_exponent < 1) throw ConfigError("radio.nlos_excess_exponent must be >= 1");
}

double fspl_db(double distance_m, double freq_hz) {
  const double d = std::max(distance_m, 1.0);
  return 20.0 * std::log10(d) + 20.0 * std::log10(freq_hz) + 20.0 * std::log10(4.0 * std::numbers::pi / kSpeedOfLight);
}

double noise_floor_dbm(const PropagationConfig& cfg) {
  return cfg.thermal_noise_density + 10.0 * std::log10(cfg.bandwidth) + cfg.noise_figure;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return lin > 0 ? 10.0 * std::log10(lin) : kNoSignalDb; }

bool los_blocked(const Scene& scene, const Vec3& a, const Vec3& b) {
  for (const auto& bld : scene.buildings)
    if (segment_hits_box(a, b, bld.box())) return true;
  return false;
}

BuildingIndex::BuildingIndex(const Scene& scene, double cell_size) : scene_(&scene), cell_(cell_size) {
  if (!(cell_size > 0)) throw ConfigError("index cell size must be positive");
  for (const auto& b : scene.buildings) {
    const Rect& f = b.footprint;
    faces_.push_back({f.min_x, f.min_y, f.max_y, b.height, -1.0, true});
    faces_.push_back({f.max_x, f.min_y, f.max_y, b.height, 1.0, true});
    faces_.push_back({f.min_y, f.min_x, f.max_x, b.height, -1.0, false});
    faces_.push_back({f.max_y, f.min_x, f.max_x, b.height, 1.0, false});
  }
  for (const auto& st : scene.stations) {
    auto& list = station_faces_.emplace_back();
    for (const auto& f : faces_)
      if (f.sign * ((f.along_x ? st.position.x : st.position.y) - f.plane) > 0) list.push_back(f);
  }
  if (scene.buildings.empty()) return;
  // Footprints are registered slightly inflated so a traversal that rounds
  // past a cell corner still meets every building near the segment.
  constexpr double kMargin = 1e-6;
  x0_ = y0_ = std::numeric_limits<double>::infinity();
  x1_ = y1_ = -std::numeric_limits<double>::infinity();
  for (const auto& b : scene.buildings) {
    x0_ = std::min(x0_, b.footprint.min_x - kMargin);
    y0_ = std::min(y0_, b.footprint.min_y - kMargin);
    x1_ = std::max(x1_, b.footprint.max_x + kMargin);
    y1_ = std::max(y1_, b.footprint.max_y + kMargin);
  }
  nx_ = std::max(1, static_cast<int>(std::ceil((x1_ - x0_) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((y1_ - y0_) / cell_)));
  cells_.resize(static_cast<std::size_t>(nx_) * ny_);
  auto col = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - x0_) / cell_)), 0, nx_ - 1); };
  auto row = [&](double y) { return std::clamp(static_cast<int>(std::floor((y - y0_) / cell_)), 0, ny_ - 1); };
  for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
    const Rect& f = scene.buildings[i].footprint;
    for (int r = row(f.min_y - kMargin); r <= row(f.max_y + kMargin); ++r)
      for (int c = col(f.min_x - kMargin); c <= col(f.max_x + kMargin); ++c)
        cells_[static_cast<std::size_t>(r) * nx_ + c].push_back(static_cast<int>(i));
  }
}

std::span<const BuildingIndex::Face> BuildingIndex::faces_facing(const Vec3& tx) const {
  for (std::size_t s = 0; s < station_faces_.size(); ++s)
    if (scene_->stations[s].position == tx) return station_faces_[s];
  return faces_;
}

bool BuildingIndex::blocked(const Vec3& a, const Vec3& b) const {
  if (cells_.empty()) return false;
  // Clip the ground projection to the grid bounds.
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double r = q / p;
    if (p < 0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
    return t0 <= t1;
  };
  if (!clip(-dx, a.x - x0_) || !clip(dx, x1_ - a.x) || !clip(-dy, a.y - y0_) || !clip(dy, y1_ - a.y))
    return false;

  const double sx = a.x + t0 * dx, sy = a.y + t0 * dy;
  int ix = std::clamp(static_cast<int>(std::floor((sx - x0_) / cell_)), 0, nx_ - 1);
  int iy = std::clamp(static_cast<int>(std::floor((sy - y0_) / cell_)), 0, ny_ - 1);
  const int step_x = dx > 0 ? 1 : -1;
  const int step_y = dy > 0 ? 1 : -1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t_max_x = dx != 0 ? (x0_ + (ix + (dx > 0 ? 1 : 0)) * cell_ - a.x) / dx : kInf;
  double t_max_y = dy != 0 ? (y0_ + (iy + (dy > 0 ? 1 : 0)) * cell_ - a.y) / dy : kInf;
  const double t_delta_x = dx != 0 ? cell_ / std::abs(dx) : kInf;
  const double t_delta_y = dy != 0 ? cell_ / std::abs(dy) : kInf;

  for (int guard = nx_ + ny_ + 2; guard > 0; --guard) {
    for (int i : cells_[static_cast<std::size_t>(iy) * nx_ + ix])
      if (segment_hits_box(a, b, scene_->buildings[static_cast<std::size_t>(i)].box())) return true;
    if (t_max_x < t_max_y) {
      if (t_max_x > t1) break;
      ix += step_x;
      t_max_x += t_delta_x;
    } else {
      if (t_max_y > t1) break;
      iy += step_y;
      t_max_y += t_delta_y;
    }
    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) break;
  }
  return false;
}

namespace {

struct BruteBlocker {
  const Scene& scene;
  bool operator()(const Vec3& a, const Vec3& b) const { return los_blocked(scene, a, b); }
};

struct IndexBlocker {
  const BuildingIndex& index;
  bool operator()(const Vec3& a, const Vec3& b) const { return index.blocked(a, b); }
};

// Image-method single bounce off one vertical face.
template <class Blocked>
bool reflect_off_face(const Blocked& blocked, const BuildingIndex::Face& f, const Vec3& tx, const Vec3& rx,
                      double& length) {
  const double tx_c = f.along_x ? tx.x : tx.y;
  const double rx_c = f.along_x ? rx.x : rx.y;
  if (!(f.sign * (tx_c - f.plane) > 0 && f.sign * (rx_c - f.plane) > 0)) return false;

  Vec3 image = tx;
  (f.along_x ? image.x : image.y) = 2.0 * f.plane - tx_c;
  const double img_c = f.along_x ? image.x : image.y;
  const double u = (f.plane - rx_c) / (img_c - rx_c);
  const Vec3 hit = rx + u * (image - rx);
  const double lateral = f.along_x ? hit.y : hit.x;
  if (lateral < f.lat_lo || lateral > f.lat_hi || hit.z < 0.0 || hit.z > f.height) return false;
  if (blocked(tx, hit) || blocked(hit, rx)) return false;
  length = distance(image, rx);
  return true;
}

template <class Blocked>
std::vector<RayPath> trace_impl(std::span<const BuildingIndex::Face> faces, const Blocked& blocked, const Vec3& tx, const Vec3& rx,
                                const PropagationConfig& cfg) {
  std::vector<RayPath> paths;
  const double f = cfg.carrier_freq;
  if (!blocked(tx, rx)) {
    const double d = distance(tx, rx);
    paths.push_back({PathKind::direct, d, -fspl_db(d, f)});
  }
  if (cfg.max_reflections >= 1) {
    // The bounce point lies laterally between tx and rx.
    const double x_lo = std::min(tx.x, rx.x), x_hi = std::max(tx.x, rx.x);
    const double y_lo = std::min(tx.y, rx.y), y_hi = std::max(tx.y, rx.y);
    for (const auto& face : faces) {
      if (face.along_x ? (face.lat_hi < y_lo || face.lat_lo > y_hi) : (face.lat_hi < x_lo || face.lat_lo > x_hi))
        continue;
      double len = 0.0;
      if (reflect_off_face(blocked, face, tx, rx, len))
        paths.push_back({PathKind::reflected, len, -fspl_db(len, f) - cfg.reflection_loss});
    }
  }
  return paths;
}

ReceivedPower power_from_paths(const std::vector<RayPath>& paths, const BaseStation& station, const Vec3& rx,
                               const PropagationConfig& cfg) {
  ReceivedPower out;
  double gain_lin = 0.0;
  for (const auto& p : paths) {
    gain_lin += db_to_linear(p.gain);
    out.los |= p.kind == PathKind::direct;
  }
  if (paths.empty()) {
    if (!cfg.diffraction_surrogate) return out;
    const double d = std::max(distance(station.position, rx), 1.0);
    const double loss = cfg.nlos_excess_exponent * 20.0 * std::log10(d) + fspl_db(1.0, cfg.carrier_freq) +
                        cfg.nlos_excess_loss;
    gain_lin = db_to_linear(-loss);
  }
  out.dbm = station.tx_power + station.antenna_gain + linear_to_db(gain_lin);
  return out;
}

}  // namespace

std::vector<RayPath> trace_paths(const Scene& scene, const Vec3& tx, const Vec3& rx, const PropagationConfig& cfg) {
  std::vector<BuildingIndex::Face> faces;
  if (cfg.max_reflections >= 1) faces = BuildingIndex(scene).faces();
  return trace_impl(faces, BruteBlocker{scene}, tx, rx, cfg);
}

std::vector<RayPath> trace_paths(const BuildingIndex& index, const Vec3& tx, const Vec3& rx,
                                 const PropagationConfig& cfg) {
  return trace_impl(index.faces_facing(tx), IndexBlocker{index}, tx, rx, cfg);
}

ReceivedPower received_power(const Scene& scene, const BaseStation& station, const Vec3& rx,
                             const PropagationConfig& cfg) {
  return power_from_paths(trace_paths(scene, station.position, rx, cfg), station, rx, cfg);
}

ReceivedPower received_power(const BuildingIndex& index, const BaseStation& station, const Vec3& rx,
                             const PropagationConfig& cfg) {
  return power_from_paths(trace_paths(index, station.position, rx, cfg), station, rx, cfg);
}

double sinr_db(double signal_dbm, std::span<const std::pair<double, double>> interferers,
               const PropagationConfig& cfg) {
  if (signal_dbm <= kNoSignalDb) return kNoSignalDb;
  double denom = db_to_linear(noise_floor_dbm(cfg));
  for (const auto& [power_dbm, load] : interferers)
    if (power_dbm > kNoSignalDb) denom += load * db_to_linear(power_dbm);
  return signal_dbm - 10.0 * std::log10(denom);
}

LinkState link_state(const Scene& scene, const BaseStation& serving, const Vec3& ue_pos,
                     std::span<const Interferer> interferers, const PropagationConfig& cfg) {
  LinkState ls;
  const auto rp = received_power(scene, serving, ue_pos, cfg);
  ls.rsrp = rp.dbm;
  ls.los = rp.los;
  ls.serving_distance = distance(serving.position, ue_pos);
  std::vector<std::pair<double, double>> inter;
  inter.reserve(interferers.size());
  for (const auto& i : interferers)
    inter.emplace_back(received_power(scene, i.station, ue_pos, cfg).dbm, std::clamp(i.load, 0.0, 1.0));
  ls.sinr = sinr_db(ls.rsrp, inter, cfg);
  return ls;
}

Heatmap heatmap(const Scene& scene, const PropagationConfig& cfg, double resolution, double rx_height) {
  if (!(resolution > 0)) throw ConfigError("heatmap resolution must be positive");
  Heatmap map;
  map.resolution = resolution;
  map.cols = static_cast<int>(std::ceil(scene.width / resolution - 1e-9));
  map.rows = static_cast<int>(std::ceil(scene.height / resolution - 1e-9));
  map.rsrp.assign(static_cast<std::size_t>(map.cols) * map.rows, kNoSignalDb);
  const BuildingIndex index(scene);
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      const Vec3 px{(c + 0.5) * resolution, (r + 0.5) * resolution, rx_height};
      double best = kNoSignalDb;
      for (const auto& st : scene.stations) best = std::max(best, received_power(index, st, px, cfg).dbm);
      map.rsrp[static_cast<std::size_t>(r) * map.cols + c] = best;
    }
  }
  return map;
}

void write_heatmap_text(const Heatmap& map, const std::filesystem::path& path,
                        const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& line : header_comments) out << "# " << line << "\n";
  out << "# rows=" << map.rows << " cols=" << map.cols << " resolution_m=" << map.resolution
      << " unit=dBm order=north_first\n";
  char buf[32];
  for (int r = map.rows - 1; r >= 0; --r) {
    for (int c = 0; c < map.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.2f", map.at(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Rgb dbm_color(double dbm) {
  static constexpr std::array<Rgb, 5> stops{{{0, 0, 96}, {0, 64, 255}, {0, 224, 224}, {255, 224, 0}, {224, 0, 0}}};
  const double t = std::clamp((dbm + 120.0) / 80.0, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double w = t - static_cast<double>(i);
  auto mix = [&](unsigned char a, unsigned char b) {
    return static_cast<unsigned char>(std::lround(a + w * (static_cast<double>(b) - a)));
  };
  return {mix(stops[i].r, stops[i + 1].r), mix(stops[i].g, stops[i + 1].g), mix(stops[i].b, stops[i + 1].b)};
}

void write_heatmap_ppm(const Heatmap& map, const Scene& scene, const std::filesystem::path& path,
                       const std::vector<std::string>& header_comments) {
  std::vector<Rgb> pixels(static_cast<std::size_t>(map.cols) * map.rows);
  const double res = map.resolution;
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      const double x = (c + 0.5) * res;
      const double y = (r + 0.5) * res;
      Rgb px = dbm_color(map.at(r, c));
      for (const auto& b : scene.buildings)
        if (b.footprint.contains(x, y)) px = {128, 128, 128};
      for (const auto& e : scene.roads.edges)
        if (point_segment_distance({x, y}, scene.roads.node_pos(e.node_a), scene.roads.node_pos(e.node_b)) <
            std::max(1.0, res * 0.5))
          px = {0, 0, 0};
      pixels[static_cast<std::size_t>(map.rows - 1 - r) * map.cols + c] = px;
    }
  }
  for (const auto& st : scene.stations) {
    const int c = static_cast<int>(st.position.x / res);
    const int r = static_cast<int>(st.position.y / res);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if (rr >= 0 && rr < map.rows && cc >= 0 && cc < map.cols)
          pixels[static_cast<std::size_t>(map.rows - 1 - rr) * map.cols + cc] = {255, 255, 255};
      }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P6\n";
  for (const auto& line : header_comments) out << "# " << line << "\n";
  out << map.cols << ' ' << map.rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size() * 3));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ndt
