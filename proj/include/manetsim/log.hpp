#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "manetsim/packets.hpp"
#include "manetsim/textio.hpp"
#include "manetsim/types.hpp"

namespace manetsim {

enum class LogEvent : std::uint8_t { Originate, Tx, Rx, Deliver, Drop };

enum class DropReason : std::uint8_t {
  None,
  BufferFull,
  BufferTimeout,
  LinkBreak,
  NoRoute,
  NodeDead,
};

inline const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::None: return "none";
    case DropReason::BufferFull: return "buffer_full";
    case DropReason::BufferTimeout: return "buffer_timeout";
    case DropReason::LinkBreak: return "link_break";
    case DropReason::NoRoute: return "no_route";
    case DropReason::NodeDead: return "node_dead";
  }
  return "?";
}

/// One provenance record. peer is the unicast receiver on Tx records and
/// the transmitting neighbor on Rx records; attempt tracks source-level
/// re-dispatches of a data packet so forwarding chains can be checked one
/// dispatch at a time.
struct PacketLogRecord {
  SimTime time = 0.0;
  std::uint64_t uid = 0;
  NodeId node = kNoNode;
  NodeId peer = kNoNode;
  PacketKind kind = PacketKind::Data;
  LogEvent event = LogEvent::Originate;
  DropReason reason = DropReason::None;
  std::uint16_t attempt = 0;
};

/// The three aggregate metrics plus their raw counters. Ratio metrics are
/// absent (not zero) when their denominator is zero.
struct MetricsSummary {
  std::optional<double> pdf;
  std::optional<double> avg_delay;
  std::optional<double> nrl;
  std::uint64_t originated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t control_tx = 0;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

/// Append-only per-run packet log. Aggregates the metrics while recording;
/// recount_metrics() below recomputes them from the raw records so the two
/// paths can be compared.
class PacketLog {
 public:
  std::uint64_t new_uid() { return next_uid_++; }

  void originate(SimTime t, const DataPacket& d) {
    push({t, d.uid, d.src, kNoNode, PacketKind::Data, LogEvent::Originate,
          DropReason::None, d.attempt});
    ++originated_;
  }

  void tx(SimTime t, NodeId sender, NodeId receiver, PacketKind kind,
          std::uint64_t uid, std::uint16_t attempt = 0) {
    push({t, uid, sender, receiver, kind, LogEvent::Tx, DropReason::None, attempt});
    if (kind == PacketKind::Data) ++data_tx_; else ++control_tx_;
  }

  void rx(SimTime t, NodeId receiver, NodeId sender, PacketKind kind,
          std::uint64_t uid, std::uint16_t attempt = 0) {
    push({t, uid, receiver, sender, kind, LogEvent::Rx, DropReason::None, attempt});
  }

  void deliver(SimTime t, NodeId node, const DataPacket& d) {
    push({t, d.uid, node, kNoNode, PacketKind::Data, LogEvent::Deliver,
          DropReason::None, d.attempt});
    ++delivered_;
    delay_sum_ += t - d.originated_at;
  }

  void drop(SimTime t, NodeId node, const DataPacket& d, DropReason why) {
    push({t, d.uid, node, kNoNode, PacketKind::Data, LogEvent::Drop, why, d.attempt});
    ++dropped_;
  }

  const std::vector<PacketLogRecord>& records() const { return records_; }

  std::uint64_t originated() const { return originated_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t control_tx() const { return control_tx_; }
  std::uint64_t data_tx() const { return data_tx_; }

  /// Streaming-accumulated summary.
  MetricsSummary summary() const {
    MetricsSummary m;
    m.originated = originated_;
    m.delivered = delivered_;
    m.dropped = dropped_;
    m.control_tx = control_tx_;
    if (originated_ > 0)
      m.pdf = static_cast<double>(delivered_) / static_cast<double>(originated_);
    if (delivered_ > 0) {
      m.avg_delay = delay_sum_ / static_cast<double>(delivered_);
      m.nrl = static_cast<double>(control_tx_) / static_cast<double>(delivered_);
    }
    return m;
  }

 private:
  void push(PacketLogRecord r) { records_.push_back(r); }

  std::vector<PacketLogRecord> records_;
  std::uint64_t next_uid_ = 1;
  std::uint64_t originated_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t control_tx_ = 0;
  std::uint64_t data_tx_ = 0;
  double delay_sum_ = 0.0;
};

// --- trace serialization ------------------------------------------------

inline const char* log_event_token(const PacketLogRecord& r) {
  switch (r.event) {
    case LogEvent::Originate: return "originate";
    case LogEvent::Tx: return "tx";
    case LogEvent::Rx: return "rx";
    case LogEvent::Deliver: return "deliver";
    case LogEvent::Drop: return "drop";
  }
  return "?";
}

/// Line-delimited dump, one record per line: `time node kind event uid`.
/// Drop records spell their reason as `drop:<reason>`.
inline std::string dump_trace(const std::vector<PacketLogRecord>& records) {
  std::string out;
  out.reserve(records.size() * 32);
  for (const auto& r : records) {
    append_double(out, r.time);
    out += ' ';
    out += std::to_string(r.node);
    out += ' ';
    out += kind_name(r.kind);
    out += ' ';
    out += log_event_token(r);
    if (r.event == LogEvent::Drop) {
      out += ':';
      out += drop_reason_name(r.reason);
    }
    out += ' ';
    out += std::to_string(r.uid);
    out += '\n';
  }
  return out;
}

inline PacketKind parse_kind(std::string_view s) {
  if (s == "data") return PacketKind::Data;
  if (s == "RREQ") return PacketKind::Rreq;
  if (s == "RREP") return PacketKind::Rrep;
  if (s == "RERR") return PacketKind::Rerr;
  if (s == "ENQ") return PacketKind::Enquiry;
  throw ConfigError("bad packet kind in trace: '" + std::string(s) + "'");
}

/// Parse a dump_trace() string back into records. peer and attempt are not
/// part of the wire format and come back as defaults.
inline std::vector<PacketLogRecord> parse_trace(std::string_view text) {
  std::vector<PacketLogRecord> out;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, ' ');
    if (f.size() != 5) throw ConfigError("bad trace line: '" + std::string(line) + "'");
    PacketLogRecord r;
    r.time = parse_double(f[0]);
    r.node = static_cast<NodeId>(parse_u64(f[1]));
    r.kind = parse_kind(f[2]);
    std::string_view ev = f[3];
    if (ev == "originate") r.event = LogEvent::Originate;
    else if (ev == "tx") r.event = LogEvent::Tx;
    else if (ev == "rx") r.event = LogEvent::Rx;
    else if (ev == "deliver") r.event = LogEvent::Deliver;
    else if (ev.substr(0, 5) == "drop:") {
      r.event = LogEvent::Drop;
      std::string_view why = ev.substr(5);
      if (why == "buffer_full") r.reason = DropReason::BufferFull;
      else if (why == "buffer_timeout") r.reason = DropReason::BufferTimeout;
      else if (why == "link_break") r.reason = DropReason::LinkBreak;
      else if (why == "no_route") r.reason = DropReason::NoRoute;
      else if (why == "node_dead") r.reason = DropReason::NodeDead;
      else throw ConfigError("bad drop reason: '" + std::string(why) + "'");
    } else {
      throw ConfigError("bad trace event: '" + std::string(ev) + "'");
    }
    r.uid = parse_u64(f[4]);
    out.push_back(r);
  }
  return out;
}

/// Independent second pass over raw records. Walks the log in order and
/// rebuilds every aggregate from scratch; shares no state with PacketLog's
/// streaming counters.
inline MetricsSummary recount_metrics(const std::vector<PacketLogRecord>& records) {
  std::unordered_map<std::uint64_t, double> origin_time;
  MetricsSummary m;
  double delay_sum = 0.0;
  for (const auto& r : records) {
    switch (r.event) {
      case LogEvent::Originate:
        ++m.originated;
        origin_time.emplace(r.uid, r.time);
        break;
      case LogEvent::Tx:
        if (r.kind != PacketKind::Data) ++m.control_tx;
        break;
      case LogEvent::Deliver: {
        ++m.delivered;
        auto it = origin_time.find(r.uid);
        if (it == origin_time.end())
          throw SimError("trace: deliver without originate, uid " + std::to_string(r.uid));
        delay_sum += r.time - it->second;
        break;
      }
      case LogEvent::Drop:
        if (r.kind == PacketKind::Data) ++m.dropped;
        break;
      case LogEvent::Rx:
        break;
    }
  }
  if (m.originated > 0)
    m.pdf = static_cast<double>(m.delivered) / static_cast<double>(m.originated);
  if (m.delivered > 0) {
    m.avg_delay = delay_sum / static_cast<double>(m.delivered);
    m.nrl = static_cast<double>(m.control_tx) / static_cast<double>(m.delivered);
  }
  return m;
}

}  // namespace manetsim
