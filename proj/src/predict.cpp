#include "ndt/predict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ndt/analysis.hpp"
#include "ndt/errors.hpp"
#include "ndt/hash.hpp"
#include "ndt/traffic.hpp"

namespace ndt {

using ojson = nlohmann::ordered_json;

void ExampleConfig::validate() const {
  if (window <= 0) throw ConfigError("predict.window must be > 0");
  if (stride <= 0) throw ConfigError("predict.stride must be > 0");
  if (horizon <= window / 2) throw ConfigError("predict.horizon must exceed half the window");
  if (min_target_samples < 1) throw ConfigError("predict.min_target_samples must be >= 1");
}

namespace {

struct MeanStd {
  double mean = 0, std = 0;
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  r.n = v.size();
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / v.size());
  return r;
}

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

ExampleSet build_examples(std::span<const SampleRow> rows, const ExampleConfig& cfg) {
  cfg.validate();
  ExampleSet out;
  if (rows.empty()) {
    out.diagnostic = "dataset is empty";
    return out;
  }
  std::map<int, std::vector<const SampleRow*>> by_cell;
  long t_first = rows.front().time, t_last = rows.front().time;
  for (const auto& r : rows) {
    t_first = std::min(t_first, r.time);
    t_last = std::max(t_last, r.time);
    if (r.cell_id >= 0) by_cell[r.cell_id].push_back(&r);
  }
  for (auto& [cell, v] : by_cell)
    std::stable_sort(v.begin(), v.end(), [](const SampleRow* a, const SampleRow* b) { return a->time < b->time; });

  const long half = cfg.window / 2;
  // Feature window must start at or after the first window (t_first - 1, t_first].
  const long first_anchor = (floor_div(t_first - 1 + cfg.window - 1, cfg.stride) + 1) * cfg.stride;
  const long last_anchor = t_last - cfg.horizon - half;
  if (first_anchor > last_anchor) {
    out.diagnostic = "dataset spans " + std::to_string(t_last - t_first + 1) + " s; need more than " +
                     std::to_string(cfg.horizon + cfg.window) + " s for one example";
    return out;
  }

  auto range = [](const std::vector<const SampleRow*>& v, long lo, long hi) {
    // rows with lo < time <= hi
    auto a = std::upper_bound(v.begin(), v.end(), lo, [](long t, const SampleRow* r) { return t < r->time; });
    auto b = std::upper_bound(v.begin(), v.end(), hi, [](long t, const SampleRow* r) { return t < r->time; });
    return std::pair{a, b};
  };

  for (const auto& [cell, v] : by_cell) {
    for (long t = first_anchor; t <= last_anchor; t += cfg.stride) {
      const auto [fa, fb] = range(v, t - cfg.window, t);
      if (fa == fb) continue;
      std::vector<double> lat;
      double load = 0, speed = 0, tx = 0, rx = 0, per = 0, bytes = 0, jit = 0, thr = 0, sinr = 0, rsrp = 0, los = 0;
      long last = 0;
      for (auto it = fa; it != fb; ++it) {
        const SampleRow& r = **it;
        load += r.cell_load;
        speed += r.speed;
        tx += static_cast<double>(r.tx_pkts);
        rx += static_cast<double>(r.rx_pkts);
        per += r.per;
        bytes += r.avg_pkt_bytes;
        jit += r.jitter_ms;
        thr += r.throughput_bps;
        sinr += r.sinr_db;
        rsrp += r.rsrp_dbm;
        los += r.los;
        if (r.latency_ms) lat.push_back(*r.latency_ms);
        last = std::max(last, r.time);
      }
      if (lat.empty()) {
        ++out.dropped_no_feature_latency;
        continue;
      }
      const auto [ta, tb] = range(v, t + cfg.horizon - half, t + cfg.horizon + half);
      std::vector<double> target;
      long first_target = t_last + 1;
      for (auto it = ta; it != tb; ++it)
        if ((*it)->latency_ms) {
          target.push_back(*(*it)->latency_ms);
          first_target = std::min(first_target, (*it)->time);
        }
      if (target.size() < cfg.min_target_samples) {
        ++out.dropped_sparse_target;
        continue;
      }
      const double n = static_cast<double>(fb - fa);
      const auto fl = mean_std(lat);
      const auto tg = mean_std(target);
      const double angle = 2.0 * M_PI * std::fmod(static_cast<double>(t), kSecondsPerDay) / kSecondsPerDay;
      HourlyExample ex;
      ex.cell_id = cell;
      ex.time = t;
      ex.features = {load / n, speed / n, tx / n,    rx / n,   per / n,  bytes / n,        fl.mean,         fl.std,
                     jit / n,  thr / n,   sinr / n,  rsrp / n, los / n,  std::sin(angle),  std::cos(angle)};
      ex.target = {tg.mean, tg.std};
      ex.feature_last_time = last;
      ex.target_first_time = first_target;
      ex.target_samples = tg.n;
      check_no_leakage(ex, cfg.horizon, cfg.window);
      out.examples.push_back(std::move(ex));
    }
  }
  std::stable_sort(out.examples.begin(), out.examples.end(), [](const HourlyExample& a, const HourlyExample& b) {
    return a.time != b.time ? a.time < b.time : a.cell_id < b.cell_id;
  });
  if (out.examples.empty())
    out.diagnostic = "no anchor has both feature-window latency and " + std::to_string(cfg.min_target_samples) +
                     " target samples";
  return out;
}

void check_no_leakage(const HourlyExample& ex, long horizon, long window) {
  if (ex.feature_last_time > ex.time || ex.target_first_time <= ex.time ||
      ex.target_first_time <= ex.time + horizon - window / 2)
    throw std::logic_error("example at t=" + std::to_string(ex.time) + " cell " + std::to_string(ex.cell_id) +
                           " reads data outside its windows");
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& data) {
  Normalizer n;
  const auto cols = static_cast<double>(std::max<Eigen::Index>(1, data.cols()));
  n.mean = data.rowwise().sum() / cols;
  n.scale.resize(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double var = (data.row(i).array() - n.mean(i)).square().sum() / cols;
    const double sd = std::sqrt(var);
    n.scale(i) = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& data) const {
  return (data.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd Normalizer::invert(const Eigen::MatrixXd& data) const {
  return (data.array().colwise() * scale.array()).matrix().colwise() + mean;
}

Mlp::Mlp(std::vector<int> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  for (int s : sizes_)
    if (s < 1) throw ConfigError("layer sizes must be >= 1");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double limit = std::sqrt(6.0 / sizes_[l]);
    Eigen::MatrixXd w(sizes_[l + 1], sizes_[l]);
    // A zero output layer starts every prediction at the training mean, and a
    // constant target then yields exactly zero gradient.
    const bool output = l + 2 == sizes_.size();
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = output ? 0.0 : (2.0 * uniform01(rng) - 1.0) * limit;
    w_.push_back(std::move(w));
    b_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) n += w_[l].size() + b_[l].size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (std::size_t l = 0; l < w_.size(); ++l) {
    p.insert(p.end(), w_[l].data(), w_[l].data() + w_[l].size());
    p.insert(p.end(), b_[l].data(), b_[l].data() + b_[l].size());
  }
  return p;
}

void Mlp::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw ConfigError("parameter vector has the wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    std::copy_n(p.data() + k, w_[l].size(), w_[l].data());
    k += w_[l].size();
    std::copy_n(p.data() + k, b_[l].size(), b_[l].data());
    k += b_[l].size();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = (w_[l] * a).colwise() + b_[l];
    a = l + 1 < w_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double Mlp::loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) const {
  return (forward(x) - y).squaredNorm() / static_cast<double>(y.size());
}

double Mlp::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, MlpGradients& grad, double dropout,
                     Rng* rng) const {
  const std::size_t layers = w_.size();
  std::vector<Eigen::MatrixXd> acts{x};  // inputs to each layer
  std::vector<Eigen::MatrixXd> masks;    // derivative of hidden activation incl. dropout scaling
  const bool drop = dropout > 0.0 && rng;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (w_[l] * acts.back()).colwise() + b_[l];
    if (l + 1 == layers) {
      acts.push_back(std::move(z));
      break;
    }
    Eigen::MatrixXd m = (z.array() > 0.0).cast<double>();
    if (drop) {
      const double keep = 1.0 / (1.0 - dropout);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) *= uniform01(*rng) < dropout ? 0.0 : keep;
    }
    acts.push_back(z.cwiseProduct(m));
    masks.push_back(std::move(m));
  }
  const double denom = static_cast<double>(y.size());
  Eigen::MatrixXd diff = acts.back() - y;
  const double loss = diff.squaredNorm() / denom;
  Eigen::MatrixXd delta = 2.0 * diff / denom;
  grad.w.resize(layers);
  grad.b.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad.w[l] = delta * acts[l].transpose();
    grad.b[l] = delta.rowwise().sum();
    if (l > 0) delta = (w_[l].transpose() * delta).cwiseProduct(masks[l - 1]);
  }
  return loss;
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    m_.w.push_back(Eigen::MatrixXd::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
    m_.b.push_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
  }
  v_ = m_;
}

void Adam::step(Mlp& net, const MlpGradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    update(net.weights()[l], g.w[l], m_.w[l], v_.w[l]);
    update(net.biases()[l], g.b[l], m_.b[l], v_.b[l]);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("train.dropout must lie in [0, 1)");
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train.train_fraction must lie in (0, 1)");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("train betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("train.epsilon must be > 0");
  for (int h : hidden)
    if (h < 1) throw ConfigError("train.hidden sizes must be >= 1");
}

namespace {

ojson train_config_json(const TrainConfig& c) {
  return ojson{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},     {"beta2", c.beta2},
               {"epsilon", c.epsilon},             {"batch_size", c.batch_size}, {"epochs", c.epochs},
               {"patience", c.patience},           {"min_delta", c.min_delta}, {"dropout", c.dropout},
               {"hidden", c.hidden},               {"train_fraction", c.train_fraction}, {"seed", c.seed},
               {"cell_one_hot", c.cell_one_hot}};
}

std::vector<double> model_input(const HourlyExample& ex, const std::vector<int>& one_hot_cells) {
  std::vector<double> in = ex.features;
  for (int c : one_hot_cells) in.push_back(c == ex.cell_id ? 1.0 : 0.0);
  return in;
}

Eigen::MatrixXd input_matrix(std::span<const HourlyExample> ex, const std::vector<int>& one_hot_cells) {
  const std::size_t dim = kFeatureNames.size() + one_hot_cells.size();
  Eigen::MatrixXd x(dim, ex.size());
  for (std::size_t j = 0; j < ex.size(); ++j) {
    if (ex[j].features.size() != kFeatureNames.size()) throw SchemaError("example has the wrong feature count");
    const auto in = model_input(ex[j], one_hot_cells);
    for (std::size_t i = 0; i < dim; ++i) x(i, j) = in[i];
  }
  return x;
}

Eigen::MatrixXd target_matrix(std::span<const HourlyExample> ex) {
  Eigen::MatrixXd y(2, ex.size());
  for (std::size_t j = 0; j < ex.size(); ++j) {
    y(0, j) = ex[j].target[0];
    y(1, j) = ex[j].target[1];
  }
  return y;
}

}  // namespace

std::array<double, 2> TrainedModel::predict(const HourlyExample& ex) const {
  const auto in = model_input(ex, one_hot_cells);
  Eigen::MatrixXd x(in.size(), 1);
  for (std::size_t i = 0; i < in.size(); ++i) x(i, 0) = in[i];
  const Eigen::MatrixXd y = y_norm.invert(net.forward(x_norm.apply(x)));
  return {y(0, 0), std::max(0.0, y(1, 0))};
}

std::array<double, 2> predict_naive(const HourlyExample& ex) {
  return {ex.features.at(kLatencyMeanFeature), ex.features.at(kLatencyStdFeature)};
}

TrainedModel train(std::span<const HourlyExample> examples, const TrainConfig& cfg, std::uint64_t stream_id,
                   std::vector<int> one_hot_cells) {
  cfg.validate();
  if (examples.size() < static_cast<std::size_t>(cfg.batch_size))
    throw ConfigError("need at least " + std::to_string(cfg.batch_size) + " training examples, got " +
                      std::to_string(examples.size()));
  TrainedModel model;
  model.cell_id = -1;
  model.one_hot_cells = std::move(one_hot_cells);
  model.config_hash = fnv1a_hex(train_config_json(cfg).dump());
  const Eigen::MatrixXd x_raw = input_matrix(examples, model.one_hot_cells);
  const Eigen::MatrixXd y_raw = target_matrix(examples);
  model.x_norm = Normalizer::fit(x_raw);
  model.y_norm = Normalizer::fit(y_raw);
  const Eigen::MatrixXd x = model.x_norm.apply(x_raw);
  const Eigen::MatrixXd y = model.y_norm.apply(y_raw);

  Rng rng = make_stream(cfg.seed, StreamKind::training, stream_id);
  std::vector<int> sizes{static_cast<int>(x.rows())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(2);
  model.net = Mlp(sizes, rng);
  Adam opt(model.net, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);

  const auto n = static_cast<Eigen::Index>(examples.size());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  MlpGradients grad;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
    double total = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(x.rows(), len), yb(y.rows(), len);
      for (Eigen::Index k = 0; k < len; ++k) {
        xb.col(k) = x.col(order[start + k]);
        yb.col(k) = y.col(order[start + k]);
      }
      total += model.net.backward(xb, yb, grad, cfg.dropout, &rng) * static_cast<double>(len);
      opt.step(model.net, grad);
    }
    const double epoch_loss = total / static_cast<double>(n);
    model.loss_history.push_back(epoch_loss);
    if (best - epoch_loss > cfg.min_delta) {
      best = epoch_loss;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return model;
}

namespace {

ojson normalizer_json(const Normalizer& n) {
  return ojson{{"mean", std::vector<double>(n.mean.data(), n.mean.data() + n.mean.size())},
               {"scale", std::vector<double>(n.scale.data(), n.scale.data() + n.scale.size())}};
}

Normalizer normalizer_from_json(const ojson& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("scale").get<std::vector<double>>();
  if (m.size() != s.size()) throw SchemaError("normalizer mean/scale length mismatch");
  Normalizer n;
  n.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  n.scale = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return n;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  ojson j;
  j["format"] = "ndt-mlp";
  j["version"] = 1;
  j["cell_id"] = model.cell_id;
  j["one_hot_cells"] = model.one_hot_cells;
  j["features"] = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
  j["layer_sizes"] = model.net.sizes();
  j["activation"] = "relu";
  j["config_hash"] = model.config_hash;
  j["x_norm"] = normalizer_json(model.x_norm);
  j["y_norm"] = normalizer_json(model.y_norm);
  j["parameters"] = model.net.parameters();
  j["loss_history"] = model.loss_history;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model " + path.string());
  try {
    const ojson j = ojson::parse(in);
    if (j.at("format") != "ndt-mlp") throw SchemaError("not a model file: " + path.string());
    TrainedModel m;
    m.cell_id = j.at("cell_id").get<int>();
    m.one_hot_cells = j.at("one_hot_cells").get<std::vector<int>>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.x_norm = normalizer_from_json(j.at("x_norm"));
    m.y_norm = normalizer_from_json(j.at("y_norm"));
    m.loss_history = j.at("loss_history").get<std::vector<double>>();
    Rng dummy(0);
    m.net = Mlp(j.at("layer_sizes").get<std::vector<int>>(), dummy);
    const auto p = j.at("parameters").get<std::vector<double>>();
    m.net.set_parameters(p);
    if (m.x_norm.mean.size() != m.net.sizes().front() || m.y_norm.mean.size() != m.net.sizes().back())
      throw SchemaError("normalizer size does not match the network");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("malformed model file " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError("malformed model file " + path.string() + ": " + e.what());
  }
}

long split_cutoff(std::span<const HourlyExample> examples, double train_fraction) {
  if (examples.empty()) return 0;
  std::vector<long> times;
  times.reserve(examples.size());
  for (const auto& e : examples) times.push_back(e.time);
  std::sort(times.begin(), times.end());
  const auto k = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(times.size())));
  return times[std::min(k, times.size() - 1)];
}

ExperimentOutput run_experiment(std::span<const HourlyExample> examples, const TrainConfig& cfg) {
  cfg.validate();
  ExperimentOutput out;
  auto& rep = out.report;
  rep.examples = examples.size();
  rep.cutoff_time = split_cutoff(examples, cfg.train_fraction);

  std::vector<HourlyExample> train_set, test_set;
  for (const auto& e : examples) (e.time < rep.cutoff_time ? train_set : test_set).push_back(e);
  rep.train_examples = train_set.size();
  rep.test_examples = test_set.size();
  if (train_set.size() < static_cast<std::size_t>(cfg.batch_size) || test_set.empty()) {
    rep.diagnostic = "not enough examples to train and evaluate (" + std::to_string(train_set.size()) + " train, " +
                     std::to_string(test_set.size()) + " test)";
    return out;
  }

  std::vector<int> cells;
  for (const auto& e : examples) cells.push_back(e.cell_id);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  out.global = train(train_set, cfg, 0, cfg.cell_one_hot ? cells : std::vector<int>{});
  for (int c : cells) {
    std::vector<HourlyExample> mine;
    for (const auto& e : train_set)
      if (e.cell_id == c) mine.push_back(e);
    if (mine.size() < static_cast<std::size_t>(cfg.batch_size)) {
      rep.fallback_cells.push_back(c);
      continue;
    }
    auto m = train(mine, cfg, static_cast<std::uint64_t>(c) + 1);
    m.cell_id = c;
    out.local.emplace(c, std::move(m));
  }

  // Errors are scored in the pooled training-target scale so cells are comparable.
  const Normalizer& yn = out.global->y_norm;
  struct Acc {
    std::size_t n = 0;
    std::array<double, 3> se{}, se_mean{};
  };
  std::map<int, Acc> per_cell;
  Acc all;
  std::array<std::vector<double>, 3> abs_err;
  for (const auto& e : test_set) {
    const auto it = out.local.find(e.cell_id);
    const std::array<std::array<double, 2>, 3> pred{
        predict_naive(e), out.global->predict(e), it != out.local.end() ? it->second.predict(e) : predict_naive(e)};
    auto& acc = per_cell[e.cell_id];
    ++acc.n;
    ++all.n;
    for (int k = 0; k < 3; ++k) {
      double se = 0.0;
      for (int d = 0; d < 2; ++d) {
        const double z = (pred[k][d] - e.target[d]) / yn.scale(d);
        se += z * z;
      }
      se /= 2.0;
      const double em = pred[k][0] - e.target[0];
      acc.se[k] += se;
      all.se[k] += se;
      acc.se_mean[k] += em * em;
      all.se_mean[k] += em * em;
      abs_err[k].push_back(std::abs(em));
    }
  }
  for (int k = 0; k < 3; ++k) {
    rep.mse[k] = all.se[k] / all.n;
    rep.mse_mean_ms2[k] = all.se_mean[k] / all.n;
    std::sort(abs_err[k].begin(), abs_err[k].end());
    const std::array<double, 5> qs{0.05, 0.25, 0.5, 0.75, 0.95};
    for (int q = 0; q < 5; ++q) rep.abs_error_quantiles[k][q] = quantile_sorted(abs_err[k], qs[q]);
  }
  for (const auto& [c, acc] : per_cell) {
    CellReport cr;
    cr.cell_id = c;
    cr.test_examples = acc.n;
    cr.train_examples = static_cast<std::size_t>(
        std::count_if(train_set.begin(), train_set.end(), [&](const HourlyExample& e) { return e.cell_id == c; }));
    cr.local_fallback = !out.local.count(c);
    for (int k = 0; k < 3; ++k) {
      cr.mse[k] = acc.se[k] / acc.n;
      cr.mse_mean_ms2[k] = acc.se_mean[k] / acc.n;
    }
    rep.cells.push_back(cr);
  }
  return out;
}

void write_report_json(const ExperimentReport& r, const std::filesystem::path& path) {
  auto triple = [](const std::array<double, 3>& v) {
    ojson o;
    for (int k = 0; k < 3; ++k) o[std::string(kPredictorNames[k])] = v[k];
    return o;
  };
  ojson j;
  j["examples"] = r.examples;
  j["train_examples"] = r.train_examples;
  j["test_examples"] = r.test_examples;
  j["cutoff_time_s"] = r.cutoff_time;
  j["mse_normalized"] = triple(r.mse);
  j["mse_mean_ms2"] = triple(r.mse_mean_ms2);
  ojson q;
  for (int k = 0; k < 3; ++k) q[std::string(kPredictorNames[k])] = r.abs_error_quantiles[k];
  j["abs_error_ms_quantiles"] = {{"levels", {0.05, 0.25, 0.5, 0.75, 0.95}}, {"values", q}};
  j["fallback_cells"] = r.fallback_cells;
  ojson cells = ojson::array();
  for (const auto& c : r.cells)
    cells.push_back({{"cell_id", c.cell_id},
                     {"train_examples", c.train_examples},
                     {"test_examples", c.test_examples},
                     {"local_fallback", c.local_fallback},
                     {"mse_normalized", triple(c.mse)},
                     {"mse_mean_ms2", triple(c.mse_mean_ms2)}});
  j["cells"] = cells;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_report_csv(const ExperimentReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "cell_id,train_examples,test_examples,local_fallback,mse_naive,mse_global,mse_local,"
         "mse_mean_ms2_naive,mse_mean_ms2_global,mse_mean_ms2_local\n";
  char buf[256];
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", c.cell_id, c.train_examples,
                  c.test_examples, c.local_fallback ? 1 : 0, c.mse[0], c.mse[1], c.mse[2], c.mse_mean_ms2[0],
                  c.mse_mean_ms2[1], c.mse_mean_ms2[2]);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ndt
