#include "ndt/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ndt/analysis.hpp"
#include "ndt/dataset.hpp"
#include "ndt/errors.hpp"
#include "ndt/hash.hpp"
#include "ndt/propagation.hpp"

#ifndef NDT_VERSION
#define NDT_VERSION "0.0.0"
#endif

namespace ndt {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string tool_version() { return NDT_VERSION; }

void RunConfig::finalize() {
  model.sim.seed = seed;
  train.seed = seed;
  if (model.spawn.target_population < 0) throw ConfigError("vehicles must be >= 0");
  if (scene.station_count < 1) throw ConfigError("stations must be >= 1");
  if (model.spawn.route_length < 1) throw ConfigError("spawn.route_length must be >= 1");
  if (!(model.spawn.speed_jitter >= 0 && model.spawn.speed_jitter < 1))
    throw ConfigError("spawn.speed_jitter must lie in [0, 1)");
  model.sim.validate();
  model.radio.validate();
  model.profile.validate();
  model.background.validate();
  if (!(model.flow.packet_size > 0)) throw ConfigError("flow.packet_size must be > 0");
  if (!(model.flow.nominal_rate > 0)) throw ConfigError("flow.nominal_rate must be > 0");
  if (!(model.flow.min_rate_fraction > 0 && model.flow.min_rate_fraction <= 1))
    throw ConfigError("flow.min_rate_fraction must lie in (0, 1]");
  examples.validate();
  train.validate();
  for (int h : analysis.hours)
    if (h < 0 || h > 23) throw ConfigError("analysis.hours entries must lie in [0, 23]");
  if (!(analysis.window_minutes > 0)) throw ConfigError("analysis.window_minutes must be > 0");
  if (!(heatmap.resolution > 0)) throw ConfigError("heatmap.resolution_m must be > 0");
  if (bench.vehicles.empty() || bench.stations.empty()) throw ConfigError("bench lists must be nonempty");
  for (int v : bench.vehicles)
    if (v < 0) throw ConfigError("bench.vehicles entries must be >= 0");
  for (int b : bench.stations)
    if (b < 1) throw ConfigError("bench.stations entries must be >= 1");
  if (!(bench.duration > 0)) throw ConfigError("bench.duration_s must be > 0");
  if (bench.repeats < 1) throw ConfigError("bench.repeats must be >= 1");
}

namespace {

// Reads keys of one JSON object, remembering which were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  std::optional<Section> sub(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key " + where(k));
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_scene(Section s, RunConfig& c) {
  auto& p = c.scene;
  std::string path;
  if (s.has("path")) {
    s.get("path", path);
    c.scene_path = path;
  }
  s.get("width_m", p.width);
  s.get("height_m", p.height);
  s.get("grid_x", p.grid_x);
  s.get("grid_y", p.grid_y);
  s.get("block_size_m", p.block_size);
  s.get("building_density", p.building_density);
  s.get("street_setback_m", p.street_setback);
  s.get("min_building_height_m", p.min_building_height);
  s.get("max_building_height_m", p.max_building_height);
  s.get("station_height_m", p.station_height);
  s.get("tx_power_dbm", p.tx_power);
  s.get("antenna_gain_dbi", p.antenna_gain);
  s.finish();
}

void read_radio(Section s, PropagationConfig& r) {
  s.get("carrier_freq_hz", r.carrier_freq);
  s.get("bandwidth_hz", r.bandwidth);
  s.get("noise_figure_db", r.noise_figure);
  s.get("thermal_noise_density_dbm_hz", r.thermal_noise_density);
  s.get("reflection_loss_db", r.reflection_loss);
  s.get("max_reflections", r.max_reflections);
  s.get("nlos_excess_exponent", r.nlos_excess_exponent);
  s.get("nlos_excess_loss_db", r.nlos_excess_loss);
  s.get("diffraction_surrogate", r.diffraction_surrogate);
  s.finish();
}

void read_sim(Section s, SimConfig& m) {
  s.get("tick_s", m.tick);
  s.get("handover_hysteresis_db", m.handover_hysteresis);
  s.get("core_latency_ms", m.core_latency);
  s.get("harq_max_retx", m.harq_max_retx);
  s.get("harq_rtt_ms", m.harq_rtt);
  s.get("scheduler_efficiency", m.scheduler_efficiency);
  s.get("shadowing_sigma_db", m.shadowing_sigma);
  s.get("shadowing_decorrelation_m", m.shadowing_decorrelation);
  s.get("per_midpoint_db", m.per_midpoint);
  s.get("per_slope_db", m.per_slope);
  s.get("max_queue_packets", m.max_queue_packets);
  s.get("ue_height_m", m.ue_height);
  s.get("contention_wait_ms", m.contention_wait);
  s.finish();
}

void read_profile(Section s, DiurnalProfile& p) {
  if (s.has("hourly")) {
    std::vector<double> h;
    s.get("hourly", h);
    if (h.size() != 24) throw ConfigError(s.where("hourly") + " must have 24 entries");
    std::copy(h.begin(), h.end(), p.hourly.begin());
  }
  if (s.has("path")) {
    std::string path;
    s.get("path", path);
    const double sigma = p.noise_sigma;
    p = load_profile(path);
    p.noise_sigma = sigma;
  }
  s.get("noise_sigma", p.noise_sigma);
  s.finish();
}

void read_background(Section s, BackgroundConfig& b) {
  s.get("cell_peak", b.cell_peak);
  s.get("factor_min", b.factor_min);
  s.get("factor_max", b.factor_max);
  s.get("phase_shift_max_hours", b.phase_shift_max_hours);
  s.finish();
}

void read_flow(Section s, FlowConfig& f) {
  s.get("packet_size_bytes", f.packet_size);
  s.get("nominal_rate_pps", f.nominal_rate);
  s.get("min_rate_fraction", f.min_rate_fraction);
  s.get("scale_with_load", f.scale_with_load);
  s.finish();
}

void read_spawn(Section s, SpawnModel& m) {
  s.get("speed_jitter", m.speed_jitter);
  s.get("route_length", m.route_length);
  s.finish();
}

void read_examples(Section s, ExampleConfig& e) {
  s.get("window_s", e.window);
  s.get("stride_s", e.stride);
  s.get("horizon_s", e.horizon);
  s.get("min_target_samples", e.min_target_samples);
  s.finish();
}

void read_train(Section s, TrainConfig& t) {
  s.get("learning_rate", t.learning_rate);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("epsilon", t.epsilon);
  s.get("batch_size", t.batch_size);
  s.get("epochs", t.epochs);
  s.get("patience", t.patience);
  s.get("min_delta", t.min_delta);
  s.get("dropout", t.dropout);
  s.get("hidden", t.hidden);
  s.get("train_fraction", t.train_fraction);
  s.get("cell_one_hot", t.cell_one_hot);
  s.finish();
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(j, "");
  top.get("seed", c.seed);
  double duration = c.model.sim.duration;
  top.get("duration_s", duration);
  c.model.sim.duration = duration;
  top.get("vehicles", c.model.spawn.target_population);
  top.get("stations", c.scene.station_count);
  top.get("trace", c.write_trace);
  std::string out;
  if (top.has("out")) {
    top.get("out", out);
    c.out = out;
  }
  if (auto s = top.sub("scene")) read_scene(*s, c);
  if (auto s = top.sub("radio")) read_radio(*s, c.model.radio);
  if (auto s = top.sub("sim")) read_sim(*s, c.model.sim);
  if (auto s = top.sub("profile")) read_profile(*s, c.model.profile);
  if (auto s = top.sub("background")) read_background(*s, c.model.background);
  if (auto s = top.sub("flow")) read_flow(*s, c.model.flow);
  if (auto s = top.sub("spawn")) read_spawn(*s, c.model.spawn);
  if (auto s = top.sub("examples")) read_examples(*s, c.examples);
  if (auto s = top.sub("train")) read_train(*s, c.train);
  if (auto s = top.sub("analysis")) {
    s->get("hours", c.analysis.hours);
    s->get("window_minutes", c.analysis.window_minutes);
    s->finish();
  }
  if (auto s = top.sub("heatmap")) {
    s->get("resolution_m", c.heatmap.resolution);
    s->get("rx_height_m", c.heatmap.rx_height);
    s->finish();
  }
  if (auto s = top.sub("bench")) {
    s->get("vehicles", c.bench.vehicles);
    s->get("stations", c.bench.stations);
    s->get("fixed_vehicles", c.bench.fixed_vehicles);
    s->get("fixed_stations", c.bench.fixed_stations);
    s->get("duration_s", c.bench.duration);
    s->get("repeats", c.bench.repeats);
    s->finish();
  }
  top.finish();
  c.finalize();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

namespace {

ojson config_json(const RunConfig& c) {
  const auto& p = c.scene;
  const auto& r = c.model.radio;
  const auto& m = c.model.sim;
  const auto& b = c.model.background;
  const auto& f = c.model.flow;
  const auto& t = c.train;
  ojson scene{{"width_m", p.width},
              {"height_m", p.height},
              {"grid_x", p.grid_x},
              {"grid_y", p.grid_y},
              {"block_size_m", p.block_size},
              {"building_density", p.building_density},
              {"street_setback_m", p.street_setback},
              {"min_building_height_m", p.min_building_height},
              {"max_building_height_m", p.max_building_height},
              {"station_height_m", p.station_height},
              {"tx_power_dbm", p.tx_power},
              {"antenna_gain_dbi", p.antenna_gain}};
  if (c.scene_path) scene["path"] = c.scene_path->string();
  return ojson{
      {"seed", c.seed},
      {"duration_s", m.duration},
      {"vehicles", c.model.spawn.target_population},
      {"stations", p.station_count},
      {"trace", c.write_trace},
      {"scene", scene},
      {"radio",
       {{"carrier_freq_hz", r.carrier_freq},
        {"bandwidth_hz", r.bandwidth},
        {"noise_figure_db", r.noise_figure},
        {"thermal_noise_density_dbm_hz", r.thermal_noise_density},
        {"reflection_loss_db", r.reflection_loss},
        {"max_reflections", r.max_reflections},
        {"nlos_excess_exponent", r.nlos_excess_exponent},
        {"nlos_excess_loss_db", r.nlos_excess_loss},
        {"diffraction_surrogate", r.diffraction_surrogate}}},
      {"sim",
       {{"tick_s", m.tick},
        {"handover_hysteresis_db", m.handover_hysteresis},
        {"core_latency_ms", m.core_latency},
        {"harq_max_retx", m.harq_max_retx},
        {"harq_rtt_ms", m.harq_rtt},
        {"scheduler_efficiency", m.scheduler_efficiency},
        {"shadowing_sigma_db", m.shadowing_sigma},
        {"shadowing_decorrelation_m", m.shadowing_decorrelation},
        {"per_midpoint_db", m.per_midpoint},
        {"per_slope_db", m.per_slope},
        {"max_queue_packets", m.max_queue_packets},
        {"ue_height_m", m.ue_height},
        {"contention_wait_ms", m.contention_wait}}},
      {"profile", {{"hourly", c.model.profile.hourly}, {"noise_sigma", c.model.profile.noise_sigma}}},
      {"background",
       {{"cell_peak", b.cell_peak},
        {"factor_min", b.factor_min},
        {"factor_max", b.factor_max},
        {"phase_shift_max_hours", b.phase_shift_max_hours}}},
      {"flow",
       {{"packet_size_bytes", f.packet_size},
        {"nominal_rate_pps", f.nominal_rate},
        {"min_rate_fraction", f.min_rate_fraction},
        {"scale_with_load", f.scale_with_load}}},
      {"spawn", {{"speed_jitter", c.model.spawn.speed_jitter}, {"route_length", c.model.spawn.route_length}}},
      {"examples",
       {{"window_s", c.examples.window},
        {"stride_s", c.examples.stride},
        {"horizon_s", c.examples.horizon},
        {"min_target_samples", c.examples.min_target_samples}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"epsilon", t.epsilon},
        {"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"patience", t.patience},
        {"min_delta", t.min_delta},
        {"dropout", t.dropout},
        {"hidden", t.hidden},
        {"train_fraction", t.train_fraction},
        {"cell_one_hot", t.cell_one_hot}}},
      {"analysis", {{"hours", c.analysis.hours}, {"window_minutes", c.analysis.window_minutes}}},
      {"heatmap", {{"resolution_m", c.heatmap.resolution}, {"rx_height_m", c.heatmap.rx_height}}},
      {"bench",
       {{"vehicles", c.bench.vehicles},
        {"stations", c.bench.stations},
        {"fixed_vehicles", c.bench.fixed_vehicles},
        {"fixed_stations", c.bench.fixed_stations},
        {"duration_s", c.bench.duration},
        {"repeats", c.bench.repeats}}},
  };
}

ojson provenance(const RunConfig& c) {
  return ojson{{"tool", "ndt"}, {"version", tool_version()}, {"config_hash", config_hash(c)}, {"seed", c.seed}};
}

std::vector<std::string> provenance_lines(const RunConfig& c) {
  return {"tool ndt " + tool_version(), "config_hash " + config_hash(c), "seed " + std::to_string(c.seed)};
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_json_file(const ojson& j, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

// Adds one command's record to run_metadata.json; records from a different
// configuration are discarded.
void record_run(const RunConfig& c, const std::string& command, ojson details,
                const std::vector<std::string>& artifacts) {
  const auto path = c.out / "run_metadata.json";
  ojson meta;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      meta = ojson::parse(in);
      if (!meta.is_object() || meta.value("config_hash", "") != config_hash(c)) meta = ojson();
    } catch (const ojson::exception&) {
      meta = ojson();
    }
  }
  if (meta.is_null()) {
    meta = provenance(c);
    meta["config"] = config_json(c);
    meta["commands"] = ojson::object();
  }
  details["artifacts"] = artifacts;
  meta["commands"][command] = std::move(details);
  write_json_file(meta, path);
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(config_json(cfg).dump()); }

Scene build_scene(const RunConfig& cfg) {
  if (cfg.scene_path) return load_scene(*cfg.scene_path);
  return generate_scene(cfg.scene, cfg.seed);
}

void cmd_scene(const RunConfig& cfg) {
  ensure_dir(cfg.out);
  const Scene scene = build_scene(cfg);
  save_scene(scene, cfg.out / "scene.json");
  record_run(cfg, "scene",
             {{"buildings", scene.buildings.size()},
              {"stations", scene.stations.size()},
              {"road_nodes", scene.roads.nodes.size()},
              {"road_edges", scene.roads.edges.size()}},
             {"scene.json"});
}

SimulateResult cmd_simulate(const RunConfig& cfg) {
  ensure_dir(cfg.out);
  const Scene scene = build_scene(cfg);
  SimulateResult res;
  res.dataset = cfg.out / "dataset.csv";
  Simulator sim(scene, cfg.model);
  std::ofstream trace;
  std::vector<std::string> artifacts{"dataset.csv"};
  if (cfg.write_trace) {
    trace.open(cfg.out / "mobility_trace.csv");
    if (!trace) throw IoError("cannot open mobility trace for writing");
    trace << "time_s,vehicle_id,x_m,y_m,speed_mps,heading_deg\n";
    sim.trace = &trace;
    artifacts.push_back("mobility_trace.csv");
  }
  DatasetWriter writer(res.dataset);
  const auto t0 = std::chrono::steady_clock::now();
  sim.run([&](std::span<const SampleRow> rows) {
    for (const auto& r : rows) writer.write(r);
    res.conservation_violations += static_cast<long>(sim.conservation_violations().size());
  });
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.rows = writer.finish();
  res.capacity_violations = sim.world().capacity_violations;
  if (trace.is_open() && !trace) throw IoError("failed writing mobility trace");
  record_run(cfg, "simulate",
             {{"rows", res.rows},
              {"wall_time_s", res.wall_seconds},
              {"conservation_violations", res.conservation_violations},
              {"capacity_violations", res.capacity_violations}},
             artifacts);
  return res;
}

void cmd_heatmap(const RunConfig& cfg) {
  ensure_dir(cfg.out);
  const Scene scene = build_scene(cfg);
  const auto map = heatmap(scene, cfg.model.radio, cfg.heatmap.resolution, cfg.heatmap.rx_height);
  const auto lines = provenance_lines(cfg);
  write_heatmap_text(map, cfg.out / "heatmap.txt", lines);
  write_heatmap_ppm(map, scene, cfg.out / "heatmap.ppm", lines);
  record_run(cfg, "heatmap", {{"cols", map.cols}, {"rows", map.rows}, {"resolution_m", map.resolution}},
             {"heatmap.txt", "heatmap.ppm"});
}

AnalyzeResult cmd_analyze(const RunConfig& cfg, const std::filesystem::path& dataset) {
  ensure_dir(cfg.out);
  const auto rows = read_dataset(dataset);
  AnalyzeResult res;
  res.rows = rows.size();
  std::vector<std::string> artifacts;

  const auto m = pearson_matrix(rows, default_correlation_features());
  write_correlation_csv(m, cfg.out / "correlation.csv");
  artifacts.push_back("correlation.csv");

  ojson signs = ojson::array();
  for (const auto& c : expected_correlation_signs()) {
    const auto r = m.at(c.a, c.b);
    const bool ok = r && (*r) * c.sign > 0;
    if (!ok) ++res.sign_failures;
    signs.push_back({{"a", c.a}, {"b", c.b}, {"expected_sign", c.sign}, {"r", r ? ojson(*r) : ojson()}, {"ok", ok}});
  }
  ojson sign_doc = provenance(cfg);
  sign_doc["dataset_rows"] = rows.size();
  sign_doc["constraints"] = signs;
  sign_doc["failures"] = res.sign_failures;
  write_json_file(sign_doc, cfg.out / "correlation_signs.json");
  artifacts.push_back("correlation_signs.json");

  std::vector<CellLatencySummary> all;
  for (int h : cfg.analysis.hours) {
    const auto s = cell_latency_summary(rows, h, cfg.analysis.window_minutes);
    all.insert(all.end(), s.begin(), s.end());
    char name[32];
    std::snprintf(name, sizeof name, "latency_h%02d.svg", h);
    char title[96];
    std::snprintf(title, sizeof title, "Per-cell latency around %02d:00 (seed %llu)", h,
                  static_cast<unsigned long long>(cfg.seed));
    write_latency_svg(s, title, cfg.out / name, provenance_lines(cfg));
    artifacts.push_back(name);
  }
  write_cell_summary_csv(all, cfg.out / "cell_latency.csv");
  artifacts.push_back("cell_latency.csv");
  write_diurnal_csv(diurnal_summary(rows), cfg.out / "diurnal.csv");
  artifacts.push_back("diurnal.csv");
  record_run(cfg, "analyze",
             {{"dataset", dataset.string()}, {"rows", res.rows}, {"sign_failures", res.sign_failures}}, artifacts);
  return res;
}

PredictResult cmd_predict(const RunConfig& cfg, const std::filesystem::path& dataset) {
  ensure_dir(cfg.out);
  const auto rows = read_dataset(dataset);
  const auto set = build_examples(rows, cfg.examples);
  PredictResult res;
  res.examples = set.examples.size();
  const auto t0 = std::chrono::steady_clock::now();
  auto out = run_experiment(set.examples, cfg.train);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.report = out.report;
  if (res.report.diagnostic.empty() && !set.diagnostic.empty()) res.report.diagnostic = set.diagnostic;

  std::vector<std::string> artifacts{"prediction_report.json", "prediction_cells.csv"};
  write_report_json(res.report, cfg.out / "prediction_report.json");
  {
    // Stamp provenance into the report without changing its layout elsewhere.
    std::ifstream in(cfg.out / "prediction_report.json");
    ojson j = ojson::parse(in);
    ojson stamped = provenance(cfg);
    stamped["dropped_sparse_target"] = set.dropped_sparse_target;
    stamped["dropped_no_feature_latency"] = set.dropped_no_feature_latency;
    stamped["training_wall_time_s"] = secs;
    for (auto it = j.begin(); it != j.end(); ++it) stamped[it.key()] = it.value();
    write_json_file(stamped, cfg.out / "prediction_report.json");
  }
  write_report_csv(res.report, cfg.out / "prediction_cells.csv");
  if (out.global || !out.local.empty()) ensure_dir(cfg.out / "models");
  if (out.global) {
    save_model(*out.global, cfg.out / "models" / "global.json");
    artifacts.push_back("models/global.json");
  }
  for (const auto& [cell, model] : out.local) {
    const std::string name = "models/local_cell" + std::to_string(cell) + ".json";
    save_model(model, cfg.out / name);
    artifacts.push_back(name);
  }
  record_run(cfg, "predict",
             {{"dataset", dataset.string()},
              {"examples", res.examples},
              {"training_wall_time_s", secs},
              {"mse_normalized",
               {{"naive", res.report.mse[0]}, {"global", res.report.mse[1]}, {"local", res.report.mse[2]}}}},
             artifacts);
  return res;
}

std::vector<std::string> pipeline_artifacts() {
  return {"scene.json",         "dataset.csv",   "heatmap.txt",          "heatmap.ppm",
          "correlation.csv",    "correlation_signs.json", "cell_latency.csv", "diurnal.csv",
          "latency_h11.svg",    "latency_h23.svg",        "prediction_report.json", "prediction_cells.csv",
          "models/global.json", "run_metadata.json"};
}

void cmd_pipeline(const RunConfig& cfg) {
  cmd_scene(cfg);
  const auto sim = cmd_simulate(cfg);
  cmd_heatmap(cfg);
  cmd_analyze(cfg, sim.dataset);
  cmd_predict(cfg, sim.dataset);
}

std::optional<double> loglog_slope(const std::vector<std::pair<double, double>>& xy) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : xy)
    if (x > 0 && y > 0) pts.emplace_back(std::log(x), std::log(y));
  if (pts.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0) return std::nullopt;
  return sxy / sxx;
}

namespace {

double time_point(const RunConfig& base, int vehicles, int stations) {
  RunConfig c = base;
  c.scene.station_count = stations;
  c.model.spawn.target_population = vehicles;
  c.model.sim.duration = c.bench.duration;
  c.finalize();
  const Scene scene = build_scene(c);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < c.bench.repeats; ++r) {
    Simulator sim(scene, c.model);
    const auto t0 = std::chrono::steady_clock::now();
    sim.run([](std::span<const SampleRow>) {});
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

BenchResult cmd_bench(const RunConfig& cfg) {
  if (cfg.scene_path) throw ConfigError("bench generates its own scenes; drop scene.path");
  ensure_dir(cfg.out);
  BenchResult res;
  std::vector<std::pair<double, double>> vx, bx;
  for (int v : cfg.bench.vehicles) {
    const double s = time_point(cfg, v, cfg.bench.fixed_stations);
    res.vehicle_sweep.push_back({v, cfg.bench.fixed_stations, s});
    vx.emplace_back(v, s);
  }
  for (int b : cfg.bench.stations) {
    const double s = time_point(cfg, cfg.bench.fixed_vehicles, b);
    res.station_sweep.push_back({cfg.bench.fixed_vehicles, b, s});
    bx.emplace_back(b, s);
  }
  res.vehicle_exponent = loglog_slope(vx);
  res.station_exponent = loglog_slope(bx);

  std::ofstream csv(cfg.out / "bench.csv");
  if (!csv) throw IoError("cannot open bench.csv for writing");
  csv << "sweep,vehicles,stations,wall_time_s\n";
  for (const auto& p : res.vehicle_sweep) csv << "vehicles," << p.vehicles << ',' << p.stations << ',' << p.seconds << '\n';
  for (const auto& p : res.station_sweep) csv << "stations," << p.vehicles << ',' << p.stations << ',' << p.seconds << '\n';
  if (!csv) throw IoError("failed writing bench.csv");
  csv.close();

  auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(); };
  ojson j = provenance(cfg);
  j["duration_s"] = cfg.bench.duration;
  j["vehicle_exponent"] = opt(res.vehicle_exponent);
  j["station_exponent"] = opt(res.station_exponent);
  write_json_file(j, cfg.out / "bench.json");
  record_run(cfg, "bench",
             {{"vehicle_exponent", opt(res.vehicle_exponent)}, {"station_exponent", opt(res.station_exponent)}},
             {"bench.csv", "bench.json"});
  return res;
}

}  // namespace ndt
