#include <doctest.h>

#include <fstream>

#include "ndt/traffic.hpp"
#include "support.hpp"

using namespace ndt;

TEST_CASE("default profile anchors and interpolation") {
  auto p = DiurnalProfile::standard();
  p.noise_sigma = 0.0;
  CHECK(anchor_multiplier(p, 3 * 3600.0) == doctest::Approx(0.10));
  CHECK(anchor_multiplier(p, 8 * 3600.0) == doctest::Approx(1.00));
  CHECK(anchor_multiplier(p, 7.5 * 3600.0) == doctest::Approx((0.85 + 1.00) / 2));
  CHECK(anchor_multiplier(p, 23.5 * 3600.0) == doctest::Approx((0.25 + 0.20) / 2));  // wraps at midnight
  CHECK(anchor_multiplier(p, 86400.0 + 3 * 3600.0) == doctest::Approx(0.10));
  Rng rng(1);
  CHECK(load_multiplier(p, 7.5 * 3600.0, rng) == anchor_multiplier(p, 7.5 * 3600.0));
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("noise-free load series is exactly piecewise linear") {
  auto p = DiurnalProfile::standard();
  p.noise_sigma = 0.0;
  Rng rng(2);
  double worst = 0.0;
  for (int t = 0; t < 86400; t += 7) {
    const int h = t / 3600;
    const double frac = (t - h * 3600) / 3600.0;
    const double expect = p.hourly[h] + frac * (p.hourly[(h + 1) % 24] - p.hourly[h]);
    worst = std::max(worst, std::abs(load_multiplier(p, t, rng) - expect));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("noisy multipliers stay in [0, 1]") {
  auto p = DiurnalProfile::standard();
  p.noise_sigma = 0.5;
  Rng rng(3);
  for (int t = 0; t < 86400; t += 13) {
    const double m = load_multiplier(p, t, rng);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("profile validation and file override") {
  auto p = DiurnalProfile::standard();
  p.hourly[4] = 1.3;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = DiurnalProfile::standard();
  p.hourly[8] = p.hourly[17] = 0.9;  // no hour reaches 1
  CHECK_THROWS_AS(p.validate(), ConfigError);

  const auto dir = test::temp_dir("profile");
  {
    std::ofstream f(dir / "flat.json");
    f << "{";
    for (int h = 0; h < 24; ++h) f << (h ? "," : "") << '"' << h << "\":" << (h == 12 ? 1.0 : 0.5);
    f << "}";
  }
  const auto loaded = load_profile(dir / "flat.json");
  CHECK(loaded.hourly[0] == 0.5);
  CHECK(loaded.hourly[12] == 1.0);
  {
    std::ofstream f(dir / "short.json");
    f << R"({"0": 0.5})";
  }
  CHECK_THROWS_AS(load_profile(dir / "short.json"), SchemaError);
  {
    std::ofstream f(dir / "range.json");
    f << "{";
    for (int h = 0; h < 24; ++h) f << (h ? "," : "") << '"' << h << "\":" << (h == 12 ? 1.0 : -0.5);
    f << "}";
  }
  CHECK_THROWS_AS(load_profile(dir / "range.json"), ConfigError);
  CHECK_THROWS_AS(load_profile(dir / "missing.json"), IoError);
}

TEST_CASE("background load arithmetic") {
  BackgroundConfig cfg;
  const BackgroundLoad fixed({1.0, 0.8, 1.2}, cfg);
  CHECK(fixed.load(0, 0.0) == 0.0);
  CHECK(fixed.load(0, 1.0) == doctest::Approx(0.7));
  CHECK(fixed.load(1, 0.6) / fixed.load(2, 0.6) == doctest::Approx(2.0 / 3.0));
  CHECK(fixed.phase_shift(1) == 0.0);
}

TEST_CASE("per-cell factors and shifts are drawn once and differ") {
  BackgroundConfig cfg;
  const BackgroundLoad a(12, 5, cfg), b(12, 5, cfg);
  for (int c = 0; c < 12; ++c) {
    CHECK(a.factor(c) == b.factor(c));
    CHECK(a.factor(c) >= cfg.factor_min);
    CHECK(a.factor(c) <= cfg.factor_max);
    CHECK(a.phase_shift(c) == 0.0);
  }
  CHECK(a.factor(0) != a.factor(1));
  cfg.phase_shift_max_hours = 2.0;
  const BackgroundLoad s(12, 5, cfg);
  for (int c = 0; c < 12; ++c) {
    CHECK(s.factor(c) == a.factor(c));  // shifts are drawn after the factor on the same stream
    CHECK(std::abs(s.phase_shift(c)) <= 2.0 * 3600.0);
  }
  cfg.phase_shift_max_hours = 13.0;
  CHECK_THROWS_AS(BackgroundLoad(3, 1, cfg), ConfigError);
}

TEST_CASE("rush hour exceeds the small hours in every cell") {
  const auto profile = DiurnalProfile::standard();
  const BackgroundLoad bg(12, 11, BackgroundConfig{});
  for (int c = 0; c < 12; ++c) {
    Rng rng = make_stream(11, StreamKind::cell, 1000 + c);
    double rush = 0, night = 0;
    int nr = 0, nn = 0;
    for (int t = 0; t < 86400; ++t) {
      const double l = bg.load(c, load_multiplier(profile, t, rng));
      if (t >= 7 * 3600 && t < 9 * 3600) rush += l, ++nr;
      if (t >= 2 * 3600 && t < 4 * 3600) night += l, ++nn;
    }
    CHECK(rush / nr > night / nn);
  }
}

TEST_CASE("flows track vehicles") {
  FlowConfig cfg;
  CHECK(active_flows({}, 1.0, cfg).empty());
  std::vector<Vehicle> vs(2);
  vs[0].id = 4;
  vs[1].id = 9;
  vs[1].spawn_time = 36000;
  const auto full = active_flows(vs, 1.0, cfg);
  const auto half = active_flows(vs, 0.5, cfg);
  REQUIRE(full.size() == 2);
  CHECK(full[0].flow_id == 4);
  CHECK(full[1].flow_id == 9);
  CHECK(full[1].ue_id == 9);
  CHECK(full[1].start == 36000);
  CHECK(full[0].start < full[0].end);
  CHECK(full[0].demand_rate == doctest::Approx(50.0));
  CHECK(half[0].demand_rate == doctest::Approx(25.0));
  CHECK(active_flows(vs, 0.05, cfg)[0].demand_rate == doctest::Approx(50.0 * cfg.min_rate_fraction));
  cfg.scale_with_load = false;
  CHECK(active_flows(vs, 0.5, cfg)[0].demand_rate == doctest::Approx(50.0));
}
