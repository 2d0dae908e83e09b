#include "ndt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "ndt/errors.hpp"

namespace ndt {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void check_header(std::string_view header) {
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  const auto got = split(header);
  std::vector<std::string> missing, unexpected;
  for (auto c : kDatasetColumns)
    if (std::find(got.begin(), got.end(), c) == got.end()) missing.emplace_back(c);
  for (auto g : got)
    if (std::find(kDatasetColumns.begin(), kDatasetColumns.end(), g) == kDatasetColumns.end())
      unexpected.emplace_back(g);
  if (missing.empty() && unexpected.empty() &&
      std::equal(got.begin(), got.end(), kDatasetColumns.begin(), kDatasetColumns.end()))
    return;
  std::string msg = "dataset columns do not match the schema";
  auto list = [&](const char* label, const std::vector<std::string>& cols) {
    if (cols.empty()) return;
    msg += std::string("; ") + label + ":";
    for (const auto& c : cols) msg += " " + c;
  };
  list("missing", missing);
  list("unexpected", unexpected);
  if (missing.empty() && unexpected.empty()) msg += "; columns out of order";
  throw SchemaError(msg);
}

template <class T>
T parse_num(std::string_view s, std::size_t line_no, std::string_view col) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw SchemaError("dataset line " + std::to_string(line_no) + ": bad value '" + std::string(s) +
                      "' in column " + std::string(col));
  return v;
}

}  // namespace

std::vector<SampleRow> parse_dataset(std::string_view text) {
  std::vector<SampleRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      check_header(line);
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != kDatasetColumns.size())
      throw SchemaError("dataset line " + std::to_string(line_no) + ": expected " +
                        std::to_string(kDatasetColumns.size()) + " fields, got " + std::to_string(f.size()));
    SampleRow r;
    std::size_t i = 0;
    auto d = [&] { const auto k = i++; return parse_num<double>(f[k], line_no, kDatasetColumns[k]); };
    auto l = [&] { const auto k = i++; return parse_num<long>(f[k], line_no, kDatasetColumns[k]); };
    r.time = l();
    r.hour = static_cast<int>(l());
    r.flow_id = static_cast<int>(l());
    r.ue_id = static_cast<int>(l());
    r.cell_id = static_cast<int>(l());
    r.pos_x = d();
    r.pos_y = d();
    r.speed = d();
    r.heading = d();
    r.cell_load = d();
    r.tx_pkts = l();
    r.rx_pkts = l();
    r.per = d();
    r.avg_pkt_bytes = d();
    if (f[i].empty())
      ++i;
    else
      r.latency_ms = d();
    r.jitter_ms = d();
    r.throughput_bps = d();
    r.sinr_db = d();
    r.rsrp_dbm = d();
    r.los = static_cast<int>(l());
    rows.push_back(r);
  }
  if (!header_seen) throw SchemaError("dataset is empty (no header row)");
  return rows;
}

std::vector<SampleRow> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

bool is_column(std::string_view name) {
  return std::find(kDatasetColumns.begin(), kDatasetColumns.end(), name) != kDatasetColumns.end();
}

std::optional<double> field(const SampleRow& r, std::string_view n) {
  if (n == "time_s") return static_cast<double>(r.time);
  if (n == "hour") return r.hour;
  if (n == "flow_id") return r.flow_id;
  if (n == "ue_id") return r.ue_id;
  if (n == "cell_id") return r.cell_id;
  if (n == "pos_x_m") return r.pos_x;
  if (n == "pos_y_m") return r.pos_y;
  if (n == "speed_mps") return r.speed;
  if (n == "heading_deg") return r.heading;
  if (n == "cell_load") return r.cell_load;
  if (n == "tx_pkts") return static_cast<double>(r.tx_pkts);
  if (n == "rx_pkts") return static_cast<double>(r.rx_pkts);
  if (n == "per") return r.per;
  if (n == "avg_pkt_bytes") return r.avg_pkt_bytes;
  if (n == "latency_ms") return r.latency_ms;
  if (n == "jitter_ms") return r.jitter_ms;
  if (n == "throughput_bps") return r.throughput_bps;
  if (n == "sinr_db") return r.sinr_db;
  if (n == "rsrp_dbm") return r.rsrp_dbm;
  if (n == "los") return r.los;
  throw SchemaError("unknown dataset column '" + std::string(n) + "'");
}

std::vector<std::optional<double>> column(std::span<const SampleRow> rows, std::string_view name) {
  if (!is_column(name)) throw SchemaError("unknown dataset column '" + std::string(name) + "'");
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(field(r, name));
  return out;
}

}  // namespace ndt
