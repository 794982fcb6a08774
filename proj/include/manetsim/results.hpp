#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "manetsim/scenario.hpp"

namespace manetsim {

/// One run of the experiment grid.
struct SweepCell {
  ProtocolKind protocol = ProtocolKind::Dsr;
  std::uint32_t sources = 0;
  std::uint64_t seed = 0;
  MetricsSummary metrics;
};

struct SweepOptions {
  std::vector<ProtocolKind> protocols{ProtocolKind::Dsr, ProtocolKind::Aodv,
                                      ProtocolKind::Emp};
  std::vector<std::uint32_t> sources{10, 20, 30, 40};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Called from the worker thread right after each cell's run, before its
/// simulation is torn down. Must not touch other cells.
using CellInspector = std::function<void(const SweepCell&, Simulation&)>;

/// Run the full grid. Cells are independent runs with no shared mutable
/// state, so they execute concurrently; the returned rows are always in
/// (protocol, sources, seed) order regardless of completion order.
inline std::vector<SweepCell> run_sweep(const ScenarioConfig& base,
                                        const SweepOptions& opt,
                                        const CellInspector& inspect = nullptr) {
  if (opt.sources.empty() || opt.seeds.empty() || opt.protocols.empty())
    throw ConfigError("sweep needs non-empty protocol, source and seed lists");
  std::vector<SweepCell> cells;
  for (ProtocolKind p : opt.protocols)
    for (std::uint32_t s : opt.sources)
      for (std::uint64_t seed : opt.seeds)
        cells.push_back(SweepCell{p, s, seed, {}});

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        SweepCell& cell = cells[i];
        ScenarioConfig cfg = base;
        cfg.protocol = cell.protocol;
        cfg.source_count = cell.sources;
        cfg.master_seed = cell.seed;
        Simulation sim(cfg);
        cell.metrics = sim.run().metrics;
        if (inspect) inspect(cell, sim);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  unsigned n_threads = opt.threads ? opt.threads : std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cells.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return cells;
}

// --- CSV ------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "protocol,sources,seed,pdf,avg_delay_s,nrl,originated,delivered,control_tx";

inline void append_optional(std::string& out, const std::optional<double>& v) {
  if (v) append_double(out, *v);
}

/// Header plus one row per run, absent metrics as empty fields, newline
/// terminated.
inline std::string results_to_csv(const std::vector<SweepCell>& cells) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const SweepCell& c : cells) {
    out += protocol_name(c.protocol);
    out += ',';
    out += std::to_string(c.sources);
    out += ',';
    out += std::to_string(c.seed);
    out += ',';
    append_optional(out, c.metrics.pdf);
    out += ',';
    append_optional(out, c.metrics.avg_delay);
    out += ',';
    append_optional(out, c.metrics.nrl);
    out += ',';
    out += std::to_string(c.metrics.originated);
    out += ',';
    out += std::to_string(c.metrics.delivered);
    out += ',';
    out += std::to_string(c.metrics.control_tx);
    out += '\n';
  }
  return out;
}

inline std::vector<SweepCell> parse_results_csv(std::string_view text) {
  std::vector<SweepCell> cells;
  bool header_seen = false;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ConfigError("unexpected CSV header");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9) throw ConfigError("bad CSV row: '" + std::string(line) + "'");
    SweepCell c;
    c.protocol = parse_protocol(f[0]);
    c.sources = static_cast<std::uint32_t>(parse_u64(f[1]));
    c.seed = parse_u64(f[2]);
    if (!f[3].empty()) c.metrics.pdf = parse_double(f[3]);
    if (!f[4].empty()) c.metrics.avg_delay = parse_double(f[4]);
    if (!f[5].empty()) c.metrics.nrl = parse_double(f[5]);
    c.metrics.originated = parse_u64(f[6]);
    c.metrics.delivered = parse_u64(f[7]);
    c.metrics.control_tx = parse_u64(f[8]);
    cells.push_back(c);
  }
  if (!header_seen) throw ConfigError("CSV has no header row");
  return cells;
}

// --- aggregation and plot series -------------------------------------------

enum class Metric : std::uint8_t { Pdf, AvgDelay, Nrl };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Pdf: return "pdf";
    case Metric::AvgDelay: return "delay";
    case Metric::Nrl: return "nrl";
  }
  return "?";
}

inline std::optional<double> metric_value(const MetricsSummary& s, Metric m) {
  switch (m) {
    case Metric::Pdf: return s.pdf;
    case Metric::AvgDelay: return s.avg_delay;
    case Metric::Nrl: return s.nrl;
  }
  return std::nullopt;
}

struct CellAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population form
  std::uint32_t n = 0;  // seeds with a present value
};

/// Mean and standard deviation over seeds for one (protocol, sources) cell.
inline CellAggregate aggregate(const std::vector<SweepCell>& cells, ProtocolKind p,
                               std::uint32_t sources, Metric m) {
  CellAggregate agg;
  double sum = 0.0;
  for (const SweepCell& c : cells) {
    if (c.protocol != p || c.sources != sources) continue;
    if (auto v = metric_value(c.metrics, m)) {
      sum += *v;
      ++agg.n;
    }
  }
  if (agg.n == 0) return agg;
  agg.mean = sum / agg.n;
  double var = 0.0;
  for (const SweepCell& c : cells) {
    if (c.protocol != p || c.sources != sources) continue;
    if (auto v = metric_value(c.metrics, m)) var += (*v - agg.mean) * (*v - agg.mean);
  }
  agg.stddev = std::sqrt(var / agg.n);
  return agg;
}

/// One plot-ready series per (protocol, metric): `sources seed-mean` rows,
/// sources ascending. Keys are the file names.
inline std::map<std::string, std::string> plotdata_files(const std::vector<SweepCell>& cells) {
  std::map<std::string, std::string> out;
  std::vector<std::uint32_t> source_axis;
  for (const SweepCell& c : cells)
    if (std::find(source_axis.begin(), source_axis.end(), c.sources) == source_axis.end())
      source_axis.push_back(c.sources);
  std::sort(source_axis.begin(), source_axis.end());
  for (ProtocolKind p : {ProtocolKind::Dsr, ProtocolKind::Aodv, ProtocolKind::Emp}) {
    for (Metric m : {Metric::Pdf, Metric::AvgDelay, Metric::Nrl}) {
      std::string body;
      for (std::uint32_t s : source_axis) {
        const CellAggregate agg = aggregate(cells, p, s, m);
        if (agg.n == 0) continue;
        body += std::to_string(s);
        body += ' ';
        append_double(body, agg.mean);
        body += '\n';
      }
      if (body.empty()) continue;
      out[std::string(protocol_name(p)) + "_" + metric_name(m) + ".dat"] = body;
    }
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw SimError("write failed for '" + path.string() + "'");
}

}  // namespace manetsim
