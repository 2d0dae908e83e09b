#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ndt/errors.hpp"
#include "ndt/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSchema = 4;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> duration;
  std::optional<int> vehicles;
  std::optional<int> stations;
  std::optional<std::string> scene;
  bool trace = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration (defaults apply when omitted)");
  cmd->add_option("--seed", o.seed, "Seed for scene, simulation and training");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--duration", o.duration, "Simulated seconds");
  cmd->add_option("--vehicles", o.vehicles, "Active vehicle count V");
  cmd->add_option("--stations", o.stations, "Base station count B for generated scenes");
  cmd->add_option("--scene", o.scene, "Use this scene file instead of generating one");
}

ndt::RunConfig resolve(const Overrides& o) {
  ndt::RunConfig cfg = o.config.empty() ? ndt::RunConfig{} : ndt::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.duration) cfg.model.sim.duration = *o.duration;
  if (o.vehicles) cfg.model.spawn.target_population = *o.vehicles;
  if (o.stations) cfg.scene.station_count = *o.stations;
  if (o.scene) cfg.scene_path = *o.scene;
  if (o.trace) cfg.write_trace = true;
  cfg.finalize();
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network digital twin: scene, radio, mobility, traffic, packet simulation, analysis and prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ndt::tool_version());

  Overrides o;
  std::string dataset;
  bool print_config = false;

  auto* scene = app.add_subcommand("scene", "Generate (or validate) a scene and write scene.json");
  auto* simulate = app.add_subcommand("simulate", "Run the simulation and write dataset.csv");
  auto* heatmap = app.add_subcommand("heatmap", "Best-server RSRP map as text grid and PPM image");
  auto* analyze = app.add_subcommand("analyze", "Correlation matrix, per-cell latency summaries, diurnal table");
  auto* predict = app.add_subcommand("predict", "Naive, global and local one-hour-ahead latency predictors");
  auto* pipeline = app.add_subcommand("pipeline", "scene, simulate, heatmap, analyze and predict in one directory");
  auto* bench = app.add_subcommand("bench", "Runtime scaling sweep over vehicles and stations");
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  for (auto* cmd : {scene, simulate, heatmap, analyze, predict, pipeline, bench, show}) add_common(cmd, o);
  simulate->add_flag("--trace", o.trace, "Also write a per-tick mobility trace");
  pipeline->add_flag("--trace", o.trace, "Also write a per-tick mobility trace");
  analyze->add_option("--dataset", dataset, "Dataset CSV")->required();
  predict->add_option("--dataset", dataset, "Dataset CSV")->required();
  show->add_flag("--hash", print_config, "Print only the configuration hash");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const ndt::RunConfig cfg = resolve(o);
    if (*show) {
      std::cout << (print_config ? ndt::config_hash(cfg) : ndt::config_to_json(cfg)) << '\n';
    } else if (*scene) {
      ndt::cmd_scene(cfg);
      std::cout << "scene written to " << (cfg.out / "scene.json").string() << '\n';
    } else if (*simulate) {
      const auto r = ndt::cmd_simulate(cfg);
      std::cout << "rows " << r.rows << "\nwall_time_s " << fmt(r.wall_seconds) << "\nconservation_violations "
                << r.conservation_violations << "\ndataset " << r.dataset.string() << '\n';
    } else if (*heatmap) {
      ndt::cmd_heatmap(cfg);
      std::cout << "heatmap written to " << cfg.out.string() << '\n';
    } else if (*analyze) {
      const auto r = ndt::cmd_analyze(cfg, dataset);
      std::cout << "rows " << r.rows << "\nsign_failures " << r.sign_failures << '\n';
    } else if (*predict) {
      const auto r = ndt::cmd_predict(cfg, dataset);
      std::cout << "examples " << r.examples << '\n';
      for (int k = 0; k < 3; ++k)
        std::cout << "mse_" << ndt::kPredictorNames[k] << ' ' << fmt(r.report.mse[k]) << '\n';
      if (!r.report.diagnostic.empty()) std::cout << "note " << r.report.diagnostic << '\n';
    } else if (*pipeline) {
      ndt::cmd_pipeline(cfg);
      std::cout << "pipeline artifacts written to " << cfg.out.string() << '\n';
    } else if (*bench) {
      const auto r = ndt::cmd_bench(cfg);
      for (const auto& p : r.vehicle_sweep)
        std::cout << "V=" << p.vehicles << " B=" << p.stations << " " << fmt(p.seconds) << " s\n";
      for (const auto& p : r.station_sweep)
        std::cout << "V=" << p.vehicles << " B=" << p.stations << " " << fmt(p.seconds) << " s\n";
      std::cout << "vehicle_exponent " << (r.vehicle_exponent ? fmt(*r.vehicle_exponent) : "absent")
                << "\nstation_exponent " << (r.station_exponent ? fmt(*r.station_exponent) : "absent") << '\n';
    }
  } catch (const ndt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ndt::SceneInvariantError& e) {
    std::cerr << "scene error: " << e.what() << '\n';
    for (const auto& v : e.report()) std::cerr << "  " << v.path << ": " << v.message << '\n';
    return kExitSchema;
  } catch (const ndt::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ndt::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
