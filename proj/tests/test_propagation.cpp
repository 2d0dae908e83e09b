#include <doctest.h>

#include <random>

#include "ndt/propagation.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ndt;

namespace {

Scene one_box_scene() {
  Scene s = test::square_scene();
  s.buildings.push_back({0, Rect{200, 200, 300, 300}, 20.0});
  return s;
}

BaseStation station_at(Vec3 p, double tx = 30.0) {
  BaseStation b;
  b.position = p;
  b.tx_power = tx;
  return b;
}

}  // namespace

TEST_CASE("segment_hits_box matches the sampling oracle on fixed cases") {
  const Box box{Rect{200, 200, 300, 300}, 20.0};
  const Vec3 a{100, 250, 25}, b{400, 250, 1.5};
  CHECK(oracle::sampled_blocked(a, b, box));
  CHECK(segment_hits_box(a, b, box));
  const Vec3 c{100, 250, 30}, d{400, 250, 30};
  CHECK_FALSE(oracle::sampled_blocked(c, d, box));
  CHECK_FALSE(segment_hits_box(c, d, box));
}

TEST_CASE("segment touching a face or ending on it does not count") {
  const Box box{Rect{0, 0, 10, 10}, 10.0};
  CHECK_FALSE(segment_hits_box({-5, 0, 5}, {15, 0, 5}, box));   // grazes the y=0 face
  CHECK_FALSE(segment_hits_box({-5, 5, 5}, {0, 5, 5}, box));    // ends on x=0
  CHECK_FALSE(segment_hits_box({-5, 5, 10}, {15, 5, 10}, box)); // along the roof
  CHECK(segment_hits_box({-5, 5, 5}, {0.5, 5, 5}, box));
}

TEST_CASE("los_blocked on an empty scene is always false") {
  Scene s = test::square_scene();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 500);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(los_blocked(s, {u(rng), u(rng), 10}, {u(rng), u(rng), 1}));
}

TEST_CASE("los_blocked agrees with the dense sampling oracle on random instances") {
  int disagreements = 0, hits = 0;
  for (const auto& in : oracle::los_instances(1000, 11)) {
    Scene s = test::square_scene();
    s.buildings.push_back({0, in.box.footprint, in.box.top});
    const bool got = los_blocked(s, in.a, in.b);
    hits += got;
    disagreements += got != oracle::sampled_blocked(in.a, in.b, in.box);
  }
  CHECK(disagreements == 0);
  CHECK(hits > 50);  // the mix exercises both outcomes
}

TEST_CASE("BuildingIndex gives the same answer as the exhaustive test") {
  SceneParams p;
  const Scene s = generate_scene(p, 42);
  REQUIRE(s.buildings.size() > 20);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20, 520), z(0, 40);
  for (double cell : {7.0, 20.0, 60.0, 1000.0}) {
    const BuildingIndex index(s, cell);
    int mismatches = 0;
    for (int i = 0; i < 3000; ++i) {
      const Vec3 a{u(rng), u(rng), z(rng)}, b{u(rng), u(rng), z(rng)};
      mismatches += index.blocked(a, b) != los_blocked(s, a, b);
    }
    // Axis-aligned and grid-line segments are the awkward cases for a traversal.
    for (int i = 0; i < 500; ++i) {
      const double y = 20.0 * std::floor(u(rng) / 20.0);
      const Vec3 a{u(rng), y, z(rng)}, b{u(rng), y, z(rng)};
      mismatches += index.blocked(a, b) != los_blocked(s, a, b);
      const Vec3 c{y, u(rng), z(rng)}, d{y, u(rng), z(rng)};
      mismatches += index.blocked(c, d) != los_blocked(s, c, d);
    }
    CHECK(mismatches == 0);
  }
  const PropagationConfig cfg;
  const BuildingIndex index(s);
  for (int i = 0; i < 200; ++i) {
    const auto& st = s.stations[static_cast<std::size_t>(i) % s.stations.size()];
    const Vec3 rx{u(rng), u(rng), 1.5};
    const auto a = received_power(s, st, rx, cfg);
    const auto b = received_power(index, st, rx, cfg);
    CHECK(a.dbm == b.dbm);
    CHECK(a.los == b.los);
  }
}

TEST_CASE("free-space path gain matches Friis") {
  Scene s = test::square_scene();
  PropagationConfig cfg;
  const auto p100 = trace_paths(s, {100, 100, 10}, {200, 100, 10}, cfg);
  REQUIRE(p100.size() == 1);
  CHECK(p100[0].kind == PathKind::direct);
  CHECK(p100[0].gain == doctest::Approx(oracle::friis_gain_db(100, 3.5e9)).epsilon(1e-12));
  CHECK(p100[0].gain == doctest::Approx(-83.33).epsilon(0.01 / 83.33));
  const auto p1 = trace_paths(s, {100, 100, 10}, {101, 100, 10}, cfg);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0].gain == doctest::Approx(-43.33).epsilon(0.01 / 43.33));
}

TEST_CASE("blocked direct path with reflections disabled yields no paths") {
  Scene s = test::square_scene();
  s.buildings.push_back({0, Rect{240, 100, 260, 400}, 40.0});
  PropagationConfig cfg;
  cfg.max_reflections = 0;
  CHECK(trace_paths(s, {200, 250, 10}, {300, 250, 1.5}, cfg).empty());
  cfg.diffraction_surrogate = false;
  const auto rp = received_power(s, station_at({200, 250, 10}), {300, 250, 1.5}, cfg);
  CHECK(rp.dbm == kNoSignalDb);
  CHECK_FALSE(rp.los);
}

TEST_CASE("reflected paths follow the image method") {
  Scene s = test::square_scene();
  s.buildings.push_back({0, Rect{300, 100, 320, 400}, 40.0});  // wall face at x = 300
  PropagationConfig cfg;
  const Vec3 tx{200, 200, 10}, rx{250, 300, 10};
  const auto paths = trace_paths(s, tx, rx, cfg);
  REQUIRE(paths.size() == 2);
  const Vec3 image{400, 200, 10};
  CHECK(paths[1].kind == PathKind::reflected);
  CHECK(paths[1].length == doctest::Approx(distance(image, rx)));
  CHECK(paths[1].gain == doctest::Approx(oracle::friis_gain_db(distance(image, rx), 3.5e9) - 6.0));
}

TEST_CASE("link budget in free space") {
  Scene s = test::square_scene();
  PropagationConfig cfg;
  CHECK(noise_floor_dbm(cfg) == doctest::Approx(-174.0 + 10.0 * std::log10(20e6) + 9.0));
  CHECK(noise_floor_dbm(cfg) == doctest::Approx(-91.99).epsilon(0.01 / 91.99));
  const auto ls = link_state(s, station_at({100, 100, 10}), {200, 100, 10}, {}, cfg);
  CHECK(ls.rsrp == doctest::Approx(-53.33).epsilon(0.05 / 53.33));
  CHECK(ls.sinr == doctest::Approx(38.66).epsilon(0.1 / 38.66));
  CHECK(ls.los);
}

TEST_CASE("interference handling") {
  Scene s = test::square_scene();
  PropagationConfig cfg;
  const BaseStation serving = station_at({100, 250, 10});
  const Vec3 ue{200, 250, 10};
  const auto clean = link_state(s, serving, ue, {}, cfg);
  SUBCASE("idle interferer changes nothing") {
    const std::vector<Interferer> i{{station_at({300, 250, 10}), 0.0}};
    CHECK(link_state(s, serving, ue, i, cfg).sinr == doctest::Approx(clean.sinr).epsilon(1e-12));
  }
  SUBCASE("equal-power fully loaded interferer gives about 0 dB") {
    const std::vector<Interferer> i{{station_at({300, 250, 10}), 1.0}};
    CHECK(link_state(s, serving, ue, i, cfg).sinr == doctest::Approx(0.0).epsilon(0.1));
  }
  SUBCASE("no interferers means rsrp minus noise") {
    CHECK(std::abs(clean.sinr - (clean.rsrp - noise_floor_dbm(cfg))) < 1e-9);
  }
  SUBCASE("no path gives sentinels") {
    cfg.diffraction_surrogate = false;
    Scene walled = s;
    walled.buildings.push_back({0, Rect{140, 0, 160, 500}, 60.0});
    cfg.max_reflections = 0;
    const auto ls = link_state(walled, serving, ue, {}, cfg);
    CHECK(ls.rsrp == kNoSignalDb);
    CHECK(ls.sinr == kNoSignalDb);
  }
}

TEST_CASE("propagation properties on generated scenes") {
  const Scene s = generate_scene(SceneParams{}, 8);
  PropagationConfig cfg;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 500), load(0, 1);
  for (int i = 0; i < 150; ++i) {
    const Vec3 rx{u(rng), u(rng), 1.5};
    const auto& st = s.stations[static_cast<std::size_t>(i) % s.stations.size()];
    const double direct = distance(st.position, rx);
    bool has_direct = false;
    for (const auto& p : trace_paths(s, st.position, rx, cfg)) {
      CHECK(p.gain <= 0.0);
      CHECK(p.length >= direct - 1e-9);
      has_direct |= p.kind == PathKind::direct;
    }
    const auto rp = received_power(s, st, rx, cfg);
    CHECK(rp.los == has_direct);
    CHECK(rp.los == !los_blocked(s, st.position, rx));

    // Each added interferer can only lower SINR.
    std::vector<Interferer> inter;
    double prev = link_state(s, st, rx, inter, cfg).sinr;
    for (const auto& other : s.stations) {
      if (other.id == st.id) continue;
      inter.push_back({other, load(rng)});
      const double next = link_state(s, st, rx, inter, cfg).sinr;
      CHECK(next <= prev + 1e-12);
      prev = next;
    }
    const auto ls = link_state(s, st, rx, inter, cfg);
    if (ls.rsrp > kNoSignalDb) CHECK(ls.sinr <= ls.rsrp - noise_floor_dbm(cfg) + 1e-9);
  }
  double prev = 1.0;
  for (double d = 1.0; d < 2000.0; d *= 1.3) {
    const double g = -fspl_db(d, cfg.carrier_freq);
    if (d > 1.0) CHECK(g < prev);
    prev = g;
  }
}

TEST_CASE("heatmap geometry and monotonicity") {
  Scene s = test::square_scene(500.0, {{252.5, 252.5, 25.0}});
  PropagationConfig cfg;
  const auto map = heatmap(s, cfg, 5.0, 1.5);
  CHECK(map.cols == 100);
  CHECK(map.rows == 100);
  for (int c = 51; c < 100; ++c) CHECK(map.at(50, c) < map.at(50, c - 1));
  for (int r = 51; r < 100; ++r) CHECK(map.at(r, r) < map.at(r - 1, r - 1));
  CHECK(map.at(50, 50) > map.at(50, 90));  // 200 m east
}

TEST_CASE("color ramp endpoints and clamping") {
  const Rgb lo = dbm_color(-120), hi = dbm_color(-40);
  CHECK((lo.r == 0 && lo.g == 0 && lo.b == 96));
  CHECK((hi.r == 224 && hi.g == 0 && hi.b == 0));
  const Rgb below = dbm_color(-200), above = dbm_color(0);
  CHECK((below.r == lo.r && below.g == lo.g && below.b == lo.b));
  CHECK((above.r == hi.r && above.g == hi.g && above.b == hi.b));
  const Rgb mid = dbm_color(-80);
  CHECK((mid.r == 0 && mid.g == 224 && mid.b == 224));
}

TEST_CASE("config validation") {
  PropagationConfig cfg;
  cfg.max_reflections = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.carrier_freq = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.bandwidth = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
