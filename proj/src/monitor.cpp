#include "ndt/monitor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "ndt/errors.hpp"
#include "ndt/simcore.hpp"

namespace ndt {

double jitter(std::span<const double> delays_ms) {
  if (delays_ms.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i < delays_ms.size(); ++i) sum += std::abs(delays_ms[i] - delays_ms[i - 1]);
  return sum / static_cast<double>(delays_ms.size() - 1);
}

namespace {

// Six decimals is the documented precision of every real-valued column.
double quantize(double x) { return std::round(x * 1e6) / 1e6; }

SampleRow make_row(const WorldState& world, const UeState& ue, long t) {
  const auto& w = ue.window;
  SampleRow r;
  r.time = t;
  r.hour = static_cast<int>((t / 3600) % 24);
  r.flow_id = ue.flow.flow_id;
  r.ue_id = ue.vehicle.id;
  r.cell_id = ue.serving ? world.cells[*ue.serving].cell_id : -1;
  r.pos_x = quantize(ue.pos.x);
  r.pos_y = quantize(ue.pos.y);
  r.speed = quantize(ue.vehicle.speed);
  r.heading = quantize(ue.vehicle.heading);
  if (w.load_ticks > 0)
    r.cell_load = quantize(w.load_sum / w.load_ticks);
  else if (ue.serving)
    r.cell_load = quantize(world.cells[*ue.serving].load());
  r.tx_pkts = w.tx_packets;
  r.rx_pkts = w.rx_packets;
  r.per = w.tx_packets > 0
              ? quantize(std::clamp(static_cast<double>(w.tx_packets - w.rx_packets) / w.tx_packets, 0.0, 1.0))
              : 0.0;
  r.avg_pkt_bytes = quantize(w.tx_packets > 0 ? w.tx_bytes / w.tx_packets : ue.flow.packet_size);
  if (!w.delays_ms.empty())
    r.latency_ms = quantize(std::accumulate(w.delays_ms.begin(), w.delays_ms.end(), 0.0) / w.delays_ms.size());
  r.jitter_ms = quantize(jitter(w.delays_ms));
  r.throughput_bps = quantize(w.rx_bits);  // window length is 1 s
  r.sinr_db = quantize(ue.sinr);
  r.rsrp_dbm = quantize(ue.serving ? ue.rx_dbm[*ue.serving] : kNoSignalDb);
  r.los = ue.serving ? ue.los[*ue.serving] : 0;
  return r;
}

void append_number(std::string& out, double v) {
  char buf[64];
  if (v == 0.0) v = 0.0;  // drop negative zero
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_number(std::string& out, long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::vector<SampleRow> sample(WorldState& world, long t) {
  std::vector<SampleRow> rows;
  rows.reserve(world.ues.size() + world.retired.size());
  for (const auto& ue : world.retired) rows.push_back(make_row(world, ue, t));
  for (const auto& ue : world.ues) rows.push_back(make_row(world, ue, t));
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.flow_id < b.flow_id; });
  world.retired.clear();
  for (auto& ue : world.ues) ue.window.reset();
  return rows;
}

std::string dataset_header() {
  std::string h;
  for (std::size_t i = 0; i < kDatasetColumns.size(); ++i) {
    if (i) h += ',';
    h += kDatasetColumns[i];
  }
  return h;
}

std::string format_row(const SampleRow& r) {
  std::string s;
  s.reserve(192);
  auto sep = [&] { s += ','; };
  append_number(s, r.time); sep();
  append_number(s, static_cast<long>(r.hour)); sep();
  append_number(s, static_cast<long>(r.flow_id)); sep();
  append_number(s, static_cast<long>(r.ue_id)); sep();
  append_number(s, static_cast<long>(r.cell_id)); sep();
  append_number(s, r.pos_x); sep();
  append_number(s, r.pos_y); sep();
  append_number(s, r.speed); sep();
  append_number(s, r.heading); sep();
  append_number(s, r.cell_load); sep();
  append_number(s, r.tx_pkts); sep();
  append_number(s, r.rx_pkts); sep();
  append_number(s, r.per); sep();
  append_number(s, r.avg_pkt_bytes); sep();
  if (r.latency_ms) append_number(s, *r.latency_ms);
  sep();
  append_number(s, r.jitter_ms); sep();
  append_number(s, r.throughput_bps); sep();
  append_number(s, r.sinr_db); sep();
  append_number(s, r.rsrp_dbm); sep();
  append_number(s, static_cast<long>(r.los));
  return s;
}

DatasetWriter::DatasetWriter(std::filesystem::path path)
    : path_(std::move(path)), partial_(path_.string() + ".partial"), out_(partial_, std::ios::binary) {
  if (!out_) throw IoError("cannot open " + partial_.string() + " for writing");
  out_ << dataset_header() << '\n';
}

DatasetWriter::~DatasetWriter() {
  if (!done_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(partial_, ec);
  }
}

void DatasetWriter::write(const SampleRow& row) {
  out_ << format_row(row) << '\n';
  if (!out_) throw IoError("failed writing " + partial_.string());
  ++rows_;
}

std::size_t DatasetWriter::finish() {
  out_.flush();
  if (!out_) throw IoError("failed writing " + partial_.string());
  out_.close();
  std::error_code ec;
  std::filesystem::rename(partial_, path_, ec);
  if (ec) throw IoError("cannot move dataset into place at " + path_.string() + ": " + ec.message());
  done_ = true;
  return rows_;
}

std::size_t write_dataset(std::span<const SampleRow> rows, const std::filesystem::path& path) {
  DatasetWriter w(path);
  for (const auto& r : rows) w.write(r);
  return w.finish();
}

}  // namespace ndt
