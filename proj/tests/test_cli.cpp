#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ndt/errors.hpp"
#include "ndt/pipeline.hpp"
#include "support.hpp"

using namespace ndt;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NDT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string config_error(const std::string& text) {
  try {
    config_from_json(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing names offending fields") {
  CHECK(config_error(R"({"sim": {"tick": 1}})").find("sim.tick") != std::string::npos);
  CHECK(config_error(R"({"bogus": 1})").find("bogus") != std::string::npos);
  CHECK(config_error(R"({"train": {"epochs": "many"}})").find("train.epochs") != std::string::npos);
  CHECK(config_error(R"({"vehicles": -1})").find("vehicles") != std::string::npos);
  CHECK(config_error(R"({"profile": {"hourly": [0.5, 0.5]}})").find("profile.hourly") != std::string::npos);
  CHECK(config_error("{not json").find("not valid JSON") != std::string::npos);
  CHECK(config_error(R"({"scene": 3})").find("scene") != std::string::npos);
}

TEST_CASE("config values and hash") {
  const auto c = config_from_json(R"({"seed": 7, "duration_s": 60, "vehicles": 3, "stations": 4,
                                      "sim": {"tick_s": 0.5}, "train": {"hidden": [8]}})");
  CHECK(c.seed == 7);
  CHECK(c.model.sim.duration == 60.0);
  CHECK(c.vehicles() == 3);
  CHECK(c.scene.station_count == 4);
  CHECK(c.model.sim.tick == 0.5);
  CHECK(c.train.hidden == std::vector<int>{8});
  CHECK(c.train.seed == 7);

  // the effective config re-parses to the same hash
  const auto again = config_from_json(config_to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  auto other = c;
  other.seed = 8;
  other.finalize();
  CHECK(config_hash(other) != config_hash(c));
  auto moved = c;
  moved.out = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));

  for (const char* name : {"reference.json", "smoke.json"})
    CHECK_NOTHROW(load_config(std::filesystem::path(NDT_SOURCE_DIR) / "configs" / name));
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("log-log slope") {
  CHECK(!loglog_slope({{100, 2.0}}).has_value());
  CHECK(!loglog_slope({}).has_value());
  CHECK(!loglog_slope({{100, 2.0}, {100, 3.0}}).has_value());
  const auto s = loglog_slope({{100, 1.0}, {200, 2.0}, {400, 4.0}});
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(1.0));
  const auto q = loglog_slope({{6, 36.0}, {12, 144.0}, {24, 576.0}});
  REQUIRE(q.has_value());
  CHECK(*q == doctest::Approx(2.0));
}

TEST_CASE("bench with a single point has no exponent") {
  auto cfg = config_from_json(R"({"bench": {"vehicles": [2], "stations": [2, 3], "fixed_vehicles": 2,
                                            "fixed_stations": 2, "duration_s": 5}})");
  cfg.out = test::temp_dir("bench");
  const auto r = cmd_bench(cfg);
  CHECK(r.vehicle_sweep.size() == 1);
  CHECK(!r.vehicle_exponent.has_value());
  CHECK(r.station_sweep.size() == 2);
  CHECK(std::filesystem::exists(cfg.out / "bench.csv"));
  CHECK(read_json(cfg.out / "bench.json")["vehicle_exponent"].is_null());
}

TEST_CASE("analyze on a header-only dataset") {
  const auto dir = test::temp_dir("analyze_empty");
  write_text(dir / "empty.csv", dataset_header() + "\n");
  RunConfig cfg;
  cfg.out = dir / "out";
  const auto r = cmd_analyze(cfg, dir / "empty.csv");
  CHECK(r.rows == 0);
  CHECK(r.sign_failures == 10);
  CHECK(std::filesystem::exists(cfg.out / "correlation.csv"));
  CHECK(std::filesystem::exists(cfg.out / "diurnal.csv"));
}

TEST_CASE("predict on a dataset missing a column reports the diff") {
  const auto dir = test::temp_dir("predict_missing");
  std::string header = dataset_header();
  header.erase(header.find(",jitter_ms"), std::string(",jitter_ms").size());
  write_text(dir / "bad.csv", header + "\n");
  RunConfig cfg;
  cfg.out = dir / "out";
  try {
    cmd_predict(cfg, dir / "bad.csv");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("missing: jitter_ms") != std::string::npos);
  }
}

TEST_CASE("predict on a too-short dataset writes a diagnostic report") {
  const auto dir = test::temp_dir("predict_short");
  write_text(dir / "empty.csv", dataset_header() + "\n");
  RunConfig cfg;
  cfg.out = dir / "out";
  const auto r = cmd_predict(cfg, dir / "empty.csv");
  CHECK(r.examples == 0);
  CHECK(!r.report.diagnostic.empty());
  const auto j = read_json(cfg.out / "prediction_report.json");
  CHECK(j.contains("diagnostic"));
  CHECK(!std::filesystem::exists(cfg.out / "models" / "global.json"));
}

TEST_CASE("small pipeline produces the documented artifacts and metadata") {
  auto cfg = config_from_json(R"({"seed": 3, "duration_s": 7200, "vehicles": 6, "stations": 3,
                                  "scene": {"grid_x": 3, "grid_y": 3},
                                  "train": {"hidden": [8], "epochs": 2, "batch_size": 16}})");
  cfg.out = test::temp_dir("pipeline");
  cmd_pipeline(cfg);
  for (const auto& a : pipeline_artifacts()) CHECK_MESSAGE(std::filesystem::exists(cfg.out / a), a);

  const auto meta = read_json(cfg.out / "run_metadata.json");
  CHECK(meta["config_hash"] == config_hash(cfg));
  CHECK(meta["seed"] == 3);
  CHECK(meta["version"] == tool_version());
  std::set<std::string> recorded;
  for (const auto& [cmd, rec] : meta["commands"].items())
    for (const auto& a : rec["artifacts"]) recorded.insert(a.get<std::string>());
  for (const auto& a : pipeline_artifacts())
    if (a != "run_metadata.json") CHECK_MESSAGE(recorded.count(a), a);
  for (const auto& a : recorded) CHECK_MESSAGE(std::filesystem::exists(cfg.out / a), a);

  std::ifstream svg(cfg.out / "latency_h11.svg");
  std::stringstream buf;
  buf << svg.rdbuf();
  CHECK(buf.str().find(config_hash(cfg)) != std::string::npos);
  CHECK(read_json(cfg.out / "prediction_report.json")["config_hash"] == config_hash(cfg));
}

TEST_CASE("cli exit codes") {
  const auto dir = test::temp_dir("cli");
  const std::string out = " --out " + (dir / "out").string();
  CHECK(run_cli("config --hash") == 0);
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("nosuchcommand") == 2);
  CHECK(run_cli("config --vehicles -5") == 2);
  write_text(dir / "unknown.json", R"({"sim": {"tick": 1}})");
  CHECK(run_cli("config -c " + (dir / "unknown.json").string()) == 2);
  CHECK(run_cli("config -c " + (dir / "absent.json").string()) == 3);
  CHECK(run_cli("analyze --dataset " + (dir / "absent.csv").string() + out) == 3);
  write_text(dir / "bad.csv", "time_s,hour\n");
  CHECK(run_cli("analyze --dataset " + (dir / "bad.csv").string() + out) == 4);
  write_text(dir / "scene.json", "{\"width\": ");
  CHECK(run_cli("scene --scene " + (dir / "scene.json").string() + out) == 4);
  write_text(dir / "empty.csv", dataset_header() + "\n");
  CHECK(run_cli("analyze --dataset " + (dir / "empty.csv").string() + out) == 0);
}
