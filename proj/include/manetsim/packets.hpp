#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "manetsim/types.hpp"

namespace manetsim {

/// Application payload plus the bookkeeping the metrics need. The attempt
/// counter increments each time the packet's own source re-dispatches it
/// after a reported link failure.
struct DataPacket {
  std::uint64_t uid = 0;
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  SimTime originated_at = 0.0;
  std::uint32_t payload_bytes = 512;
  std::uint16_t attempt = 1;
};

// --- DSR messages -----------------------------------------------------

struct DsrRreq {
  std::uint64_t uid = 0;
  NodeId initiator = kNoNode;
  std::uint32_t request_id = 0;
  NodeId target = kNoNode;
  std::vector<NodeId> record;  // route record, starts [initiator]
};

/// Travels from the target back to the initiator along route reversed.
/// holder indexes the node currently carrying the reply.
struct DsrRrep {
  std::uint64_t uid = 0;
  std::vector<NodeId> route;  // initiator .. target, duplicate-free
  std::uint32_t holder = 0;   // index into route
};

/// Reports the broken link (from, to); retraces back_path from the
/// detecting node toward the packet source.
struct DsrRerr {
  std::uint64_t uid = 0;
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  NodeId data_dst = kNoNode;     // destination of the packet that failed
  std::vector<NodeId> back_path; // detector .. source
  std::uint32_t holder = 0;      // index into back_path
};

struct DsrData {
  DataPacket data;
  std::vector<NodeId> route;  // full source route src .. dst
  std::uint32_t hop = 0;      // index of the current holder in route
};

// --- AODV messages ----------------------------------------------------

struct AodvRreq {
  std::uint64_t uid = 0;
  NodeId origin = kNoNode;
  std::uint32_t broadcast_id = 0;
  std::uint32_t origin_seq = 0;
  NodeId dst = kNoNode;
  std::uint32_t dst_seq = 0;
  bool dst_seq_valid = false;
  std::uint32_t hop_count = 0;
};

struct AodvRrep {
  std::uint64_t uid = 0;
  NodeId origin = kNoNode;  // RREQ source the reply unwinds toward
  NodeId dst = kNoNode;     // destination the route leads to
  std::uint32_t dst_seq = 0;
  std::uint32_t hop_count = 0;
};

struct AodvRerr {
  std::uint64_t uid = 0;
  std::vector<std::pair<NodeId, std::uint32_t>> unreachable;  // (dest, seq)
};

struct AodvData {
  DataPacket data;
};

// --- EMP messages -----------------------------------------------------

/// Multipath RREQ: hop_count carries the re-broadcaster's advertised hop
/// count for the origin; first_hop pins the link adjacent to the origin on
/// this copy's path, which is what keeps accepted paths link-disjoint.
struct EmpRreq {
  std::uint64_t uid = 0;
  NodeId origin = kNoNode;
  std::uint32_t broadcast_id = 0;
  std::uint32_t origin_seq = 0;
  NodeId dst = kNoNode;
  std::uint32_t dst_seq = 0;
  bool dst_seq_valid = false;
  std::uint32_t hop_count = 0;
  NodeId first_hop = kNoNode;
};

struct EmpRrep {
  std::uint64_t uid = 0;
  NodeId origin = kNoNode;
  std::uint32_t broadcast_id = 0;
  NodeId dst = kNoNode;
  std::uint32_t dst_seq = 0;
  std::uint32_t hop_count = 0;
  NodeId first_hop = kNoNode;  // node adjacent to dst on this reply's path
};

struct EmpRerr {
  std::uint64_t uid = 0;
  std::vector<std::pair<NodeId, std::uint32_t>> unreachable;
};

/// One-hop neighbor beacon: the sender's battery level and the fraction
/// of its airtime currently in use. Never forwarded.
struct Enquiry {
  std::uint64_t uid = 0;
  NodeId sender = kNoNode;
  double battery = 1.0;
  double bandwidth_usage = 0.0;
};

struct EmpData {
  DataPacket data;
};

using Packet = std::variant<DsrRreq, DsrRrep, DsrRerr, DsrData,
                            AodvRreq, AodvRrep, AodvRerr, AodvData,
                            EmpRreq, EmpRrep, EmpRerr, Enquiry, EmpData>;

enum class PacketKind : std::uint8_t { Data, Rreq, Rrep, Rerr, Enquiry };

inline PacketKind kind_of(const Packet& p) {
  return std::visit(
      [](const auto& m) -> PacketKind {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DsrData> || std::is_same_v<T, AodvData> ||
                      std::is_same_v<T, EmpData>) {
          return PacketKind::Data;
        } else if constexpr (std::is_same_v<T, DsrRreq> || std::is_same_v<T, AodvRreq> ||
                             std::is_same_v<T, EmpRreq>) {
          return PacketKind::Rreq;
        } else if constexpr (std::is_same_v<T, DsrRrep> || std::is_same_v<T, AodvRrep> ||
                             std::is_same_v<T, EmpRrep>) {
          return PacketKind::Rrep;
        } else if constexpr (std::is_same_v<T, DsrRerr> || std::is_same_v<T, AodvRerr> ||
                             std::is_same_v<T, EmpRerr>) {
          return PacketKind::Rerr;
        } else {
          return PacketKind::Enquiry;
        }
      },
      p);
}

inline std::uint64_t uid_of(const Packet& p) {
  return std::visit(
      [](const auto& m) -> std::uint64_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DsrData> || std::is_same_v<T, AodvData> ||
                      std::is_same_v<T, EmpData>) {
          return m.data.uid;
        } else {
          return m.uid;
        }
      },
      p);
}

inline const char* kind_name(PacketKind k) {
  switch (k) {
    case PacketKind::Data: return "data";
    case PacketKind::Rreq: return "RREQ";
    case PacketKind::Rrep: return "RREP";
    case PacketKind::Rerr: return "RERR";
    case PacketKind::Enquiry: return "ENQ";
  }
  return "?";
}

}  // namespace manetsim
