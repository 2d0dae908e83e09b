#include "ndt/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "ndt/dataset.hpp"
#include "ndt/errors.hpp"

namespace ndt {

std::optional<double> CorrelationMatrix::at(std::string_view a, std::string_view b) const {
  const auto ia = std::find(features.begin(), features.end(), a);
  const auto ib = std::find(features.begin(), features.end(), b);
  if (ia == features.end() || ib == features.end()) throw SchemaError("feature not in matrix");
  return values[ia - features.begin()][ib - features.begin()];
}

std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] && y[i]) {
      sx += *x[i];
      sy += *y[i];
      ++m;
    }
  if (m < 2) return std::nullopt;
  const double mx = sx / m, my = sy / m;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] && y[i]) {
      const double dx = *x[i] - mx, dy = *y[i] - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(std::span<const SampleRow> rows, const std::vector<std::string>& features) {
  CorrelationMatrix m;
  m.features = features;
  std::vector<std::vector<std::optional<double>>> cols;
  for (const auto& f : features) cols.push_back(column(rows, f));
  const std::size_t k = features.size();
  m.values.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      auto r = pearson(cols[i], cols[j]);
      if (i == j && r) r = 1.0;
      m.values[i][j] = r;
      m.values[j][i] = r;
    }
  }
  return m;
}

std::vector<std::string> default_correlation_features() {
  return {"cell_load", "speed_mps", "sinr_db",    "rsrp_dbm",  "los",           "tx_pkts",
          "rx_pkts",   "per",       "latency_ms", "jitter_ms", "throughput_bps"};
}

std::vector<SignConstraint> expected_correlation_signs() {
  return {
      {"sinr_db", "rsrp_dbm", +1},      {"los", "rsrp_dbm", +1},        {"los", "sinr_db", +1},
      {"sinr_db", "latency_ms", -1},    {"rsrp_dbm", "latency_ms", -1}, {"sinr_db", "per", -1},
      {"per", "rx_pkts", -1},           {"per", "latency_ms", +1},      {"throughput_bps", "cell_load", -1},
      {"throughput_bps", "per", -1},
  };
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<CellLatencySummary> cell_latency_summary(std::span<const SampleRow> rows, int hour,
                                                     double window_minutes) {
  if (hour < 0 || hour >= 24) throw ConfigError("hour must lie in [0, 24)");
  const double center = hour * 3600.0;
  const double half = window_minutes * 60.0;
  std::map<int, std::vector<double>> by_cell;
  for (const auto& r : rows) {
    if (!r.latency_ms || r.cell_id < 0) continue;
    const double tod = std::fmod(static_cast<double>(r.time), 86400.0);
    double d = std::abs(tod - center);
    d = std::min(d, 86400.0 - d);
    if (d <= half) by_cell[r.cell_id].push_back(*r.latency_ms);
  }
  std::vector<CellLatencySummary> out;
  for (auto& [cell, v] : by_cell) {
    std::sort(v.begin(), v.end());
    CellLatencySummary s;
    s.cell_id = cell;
    s.hour = hour;
    s.count = v.size();
    s.p5 = quantile_sorted(v, 0.05);
    s.p25 = quantile_sorted(v, 0.25);
    s.p50 = quantile_sorted(v, 0.50);
    s.p75 = quantile_sorted(v, 0.75);
    s.p95 = quantile_sorted(v, 0.95);
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / v.size();
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / v.size());
    out.push_back(s);
  }
  return out;
}

std::vector<DiurnalRow> diurnal_summary(std::span<const SampleRow> rows) {
  struct Acc {
    std::size_t n = 0, n_lat = 0;
    double load = 0, lat = 0, thr = 0;
  };
  std::array<Acc, 24> acc{};
  for (const auto& r : rows) {
    auto& a = acc[((r.hour % 24) + 24) % 24];
    ++a.n;
    a.load += r.cell_load;
    a.thr += r.throughput_bps;
    if (r.latency_ms) {
      ++a.n_lat;
      a.lat += *r.latency_ms;
    }
  }
  std::vector<DiurnalRow> out;
  for (int h = 0; h < 24; ++h) {
    const auto& a = acc[h];
    DiurnalRow d;
    d.hour = h;
    d.count = a.n;
    if (a.n) {
      d.mean_load = a.load / a.n;
      d.mean_throughput_bps = a.thr / a.n;
    }
    if (a.n_lat) d.mean_latency_ms = a.lat / a.n_lat;
    out.push_back(d);
  }
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string num(std::optional<double> v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "feature";
  for (const auto& f : m.features) out << ',' << f;
  out << '\n';
  for (std::size_t i = 0; i < m.features.size(); ++i) {
    out << m.features[i];
    for (std::size_t j = 0; j < m.features.size(); ++j) out << ',' << num(m.values[i][j]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_cell_summary_csv(std::span<const CellLatencySummary> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "hour,cell_id,count,p5_ms,p25_ms,p50_ms,p75_ms,p95_ms,mean_ms,std_ms\n";
  for (const auto& s : rows)
    out << s.hour << ',' << s.cell_id << ',' << s.count << ',' << num(s.p5) << ',' << num(s.p25) << ','
        << num(s.p50) << ',' << num(s.p75) << ',' << num(s.p95) << ',' << num(s.mean) << ',' << num(s.std) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_diurnal_csv(std::span<const DiurnalRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "hour,rows,mean_cell_load,mean_latency_ms,mean_throughput_bps\n";
  for (const auto& d : rows)
    out << d.hour << ',' << d.count << ',' << num(d.mean_load) << ',' << num(d.mean_latency_ms) << ','
        << num(d.mean_throughput_bps) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_latency_svg(std::span<const CellLatencySummary> rows, const std::string& title,
                       const std::filesystem::path& path, const std::vector<std::string>& comments) {
  constexpr double kW = 720, kH = 360, kLeft = 60, kRight = 20, kTop = 40, kBottom = 40;
  double y_max = 1.0;
  for (const auto& s : rows) y_max = std::max(y_max, s.p95);
  y_max *= 1.1;
  auto y_of = [&](double v) { return kTop + (kH - kTop - kBottom) * (1.0 - v / y_max); };
  const double slot = rows.empty() ? 0.0 : (kW - kLeft - kRight) / rows.size();

  auto out = open_out(path);
  char buf[512];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  for (const auto& c : comments) out << "<!-- " << c << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                "<text x=\"14\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
                "transform=\"rotate(-90 14 %.1f)\">latency (ms)</text>\n",
                kLeft, kTop, kLeft, kH - kBottom, kH / 2, kH / 2);
  out << buf;
  for (int t = 0; t <= 4; ++t) {
    const double v = y_max * t / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-family=\"sans-serif\" "
                  "font-size=\"10\">%.1f</text>\n",
                  kLeft - 4, y_of(v) + 3, v);
    out << buf;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = rows[i];
    const double cx = kLeft + slot * (i + 0.5);
    const double bw = slot * 0.5;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"#7fa7d9\" stroke=\"black\"/>\n"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#b00\" stroke-width=\"2\"/>\n"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                  "font-size=\"10\">%d</text>\n",
                  cx, y_of(s.p95), cx, y_of(s.p5), cx - bw / 2, y_of(s.p75), bw,
                  std::max(0.5, y_of(s.p25) - y_of(s.p75)), cx - bw / 2, y_of(s.p50), cx + bw / 2, y_of(s.p50), cx,
                  kH - kBottom + 14, s.cell_id);
    out << buf;
  }
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 6
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">cell</text>\n</svg>\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ndt
