#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "manetsim/routing.hpp"

namespace manetsim {

/// Freshness rule: larger destination sequence wins; equal sequences fall
/// back to the shorter path.
inline bool aodv_freshness_better(std::uint32_t cand_seq, std::uint32_t cand_hops,
                                  std::uint32_t cur_seq, std::uint32_t cur_hops) {
  if (cand_seq != cur_seq) return cand_seq > cur_seq;
  return cand_hops < cur_hops;
}

struct AodvRouteEntry {
  std::uint32_t seq = 0;
  std::uint32_t hops = 0;
  NodeId next_hop = kNoNode;
  SimTime expires_at = 0.0;
  bool valid = false;
};

/// Ad hoc On-demand Distance Vector routing: hop-by-hop forwarding over a
/// table keyed by destination, guarded by destination sequence numbers.
/// Only the destination answers route requests; link breaks invalidate the
/// affected entries and push a route error one hop upstream at a time.
class AodvNode : public RoutingProtocol {
 public:
  using RoutingProtocol::RoutingProtocol;

  void on_receive(const Packet& p, NodeId from, double /*signal*/) override {
    if (const auto* rreq = std::get_if<AodvRreq>(&p)) handle_rreq(*rreq, from);
    else if (const auto* rrep = std::get_if<AodvRrep>(&p)) handle_rrep(*rrep, from);
    else if (const auto* rerr = std::get_if<AodvRerr>(&p)) handle_rerr(*rerr, from);
    else if (const auto* data = std::get_if<AodvData>(&p)) handle_data(*data, from);
  }

  void on_unicast_outcome(const Packet& p, NodeId to, bool delivered) override {
    if (delivered) return;
    handle_link_break(to);
    if (const auto* data = std::get_if<AodvData>(&p)) {
      if (data->data.src == self_) {
        DataPacket retry = data->data;
        retry.attempt += 1;
        dispatch(std::move(retry));
      } else {
        log_.drop(now(), self_, data->data, DropReason::LinkBreak);
      }
    }
  }

  // --- read-only views ---------------------------------------------------

  std::optional<AodvRouteEntry> route_entry(NodeId dst) const {
    auto it = table_.find(dst);
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t own_seq() const { return own_seq_; }

  /// Test hook: pre-install a route (pre-warmed static scenarios).
  void install_route(NodeId dst, NodeId next_hop, std::uint32_t hops, std::uint32_t seq) {
    table_[dst] = AodvRouteEntry{seq, hops, next_hop, now() + tuning_.route_lifetime, true};
  }

 protected:
  void dispatch(DataPacket d) override {
    if (d.dst == self_) {
      log_.deliver(now(), self_, d);
      return;
    }
    if (AodvRouteEntry* e = usable(d.dst)) {
      e->expires_at = now() + tuning_.route_lifetime;
      send_unicast(e->next_hop, Packet{AodvData{std::move(d)}});
      return;
    }
    buffer_packet(d);
    ensure_discovery(d.dst);
  }

  void send_discovery(NodeId dst) override {
    own_seq_ += 1;
    const std::uint32_t bid = next_bid_++;
    note_seen(self_, bid);
    AodvRreq rreq;
    rreq.uid = log_.new_uid();
    rreq.origin = self_;
    rreq.broadcast_id = bid;
    rreq.origin_seq = own_seq_;
    rreq.dst = dst;
    if (auto it = table_.find(dst); it != table_.end()) {
      rreq.dst_seq = it->second.seq;
      rreq.dst_seq_valid = true;
    }
    rreq.hop_count = 0;
    send_broadcast(Packet{std::move(rreq)});
  }

 private:
  AodvRouteEntry* usable(NodeId dst) {
    auto it = table_.find(dst);
    if (it == table_.end()) return nullptr;
    AodvRouteEntry& e = it->second;
    if (!e.valid || e.expires_at < now()) return nullptr;
    return &e;
  }

  /// Install/refresh an entry if the freshness rule accepts the candidate.
  bool maybe_install(NodeId dst, std::uint32_t seq, std::uint32_t hops, NodeId next_hop) {
    auto it = table_.find(dst);
    if (it != table_.end() &&
        !aodv_freshness_better(seq, hops, it->second.seq, it->second.hops)) {
      return false;
    }
    table_[dst] = AodvRouteEntry{seq, hops, next_hop, now() + tuning_.route_lifetime, true};
    return true;
  }

  void handle_rreq(const AodvRreq& rreq, NodeId from) {
    if (rreq.origin == self_) return;
    if (!note_seen(rreq.origin, rreq.broadcast_id)) return;  // duplicate flood copy
    // Reverse route back to the origin, via the transmitting neighbor.
    maybe_install(rreq.origin, rreq.origin_seq, rreq.hop_count + 1, from);
    if (rreq.dst == self_) {
      own_seq_ = std::max(own_seq_, rreq.dst_seq_valid ? rreq.dst_seq : 0) + 1;
      AodvRrep rrep;
      rrep.uid = log_.new_uid();
      rrep.origin = rreq.origin;
      rrep.dst = self_;
      rrep.dst_seq = own_seq_;
      rrep.hop_count = 0;
      if (AodvRouteEntry* rev = usable(rreq.origin)) {
        rev->expires_at = now() + tuning_.route_lifetime;
        send_unicast(rev->next_hop, Packet{std::move(rrep)});
      }
      return;
    }
    AodvRreq fwd = rreq;
    fwd.hop_count += 1;
    send_broadcast(Packet{std::move(fwd)});
  }

  void handle_rrep(const AodvRrep& rrep, NodeId from) {
    // Forward route toward the replying destination; reject stale info.
    if (!maybe_install(rrep.dst, rrep.dst_seq, rrep.hop_count + 1, from)) return;
    if (rrep.origin == self_) {
      finish_discovery(rrep.dst);
      for (DataPacket& d : take_buffered(rrep.dst)) dispatch(std::move(d));
      return;
    }
    AodvRouteEntry* rev = usable(rrep.origin);
    if (!rev) return;  // reverse route missing: drop
    rev->expires_at = now() + tuning_.route_lifetime;
    AodvRrep fwd = rrep;
    fwd.hop_count += 1;
    send_unicast(rev->next_hop, Packet{std::move(fwd)});
  }

  void handle_data(const AodvData& msg, NodeId from) {
    if (msg.data.dst == self_) {
      log_.deliver(now(), self_, msg.data);
      return;
    }
    log_.rx(now(), self_, from, PacketKind::Data, msg.data.uid, msg.data.attempt);
    if (AodvRouteEntry* e = usable(msg.data.dst)) {
      e->expires_at = now() + tuning_.route_lifetime;
      send_unicast(e->next_hop, Packet{AodvData{msg.data}});
      return;
    }
    log_.drop(now(), self_, msg.data, DropReason::NoRoute);
    // Tell the neighborhood this destination is gone from here.
    std::uint32_t seq = 1;
    if (auto it = table_.find(msg.data.dst); it != table_.end()) {
      it->second.seq += 1;
      it->second.valid = false;
      seq = it->second.seq;
    }
    AodvRerr rerr;
    rerr.uid = log_.new_uid();
    rerr.unreachable.emplace_back(msg.data.dst, seq);
    send_broadcast(Packet{std::move(rerr)});
  }

  /// The link to neighbor `dead` is gone: invalidate everything routed
  /// through it and broadcast the unreachable set, sequence numbers
  /// bumped so stale replies lose.
  void handle_link_break(NodeId dead) {
    std::vector<std::pair<NodeId, std::uint32_t>> lost;
    for (auto& [dst, e] : table_) {
      if (e.valid && e.next_hop == dead) {
        e.valid = false;
        e.seq += 1;
        lost.emplace_back(dst, e.seq);
      }
    }
    if (lost.empty()) return;
    AodvRerr rerr;
    rerr.uid = log_.new_uid();
    rerr.unreachable = std::move(lost);
    send_broadcast(Packet{std::move(rerr)});
  }

  void handle_rerr(const AodvRerr& rerr, NodeId from) {
    std::vector<std::pair<NodeId, std::uint32_t>> lost;
    for (const auto& [dst, seq] : rerr.unreachable) {
      auto it = table_.find(dst);
      if (it != table_.end() && it->second.valid && it->second.next_hop == from) {
        it->second.valid = false;
        it->second.seq = std::max(it->second.seq, seq);
        lost.emplace_back(dst, it->second.seq);
      }
      // Traffic waiting on this destination needs a fresh discovery now.
      if (has_buffered(dst) && !usable(dst)) force_discovery(dst);
    }
    if (lost.empty()) return;
    AodvRerr fwd;
    fwd.uid = log_.new_uid();
    fwd.unreachable = std::move(lost);
    send_broadcast(Packet{std::move(fwd)});
  }

  /// Returns false when (origin, bid) was already recorded. Entries expire
  /// after the duplicate-suppression window; the sweep is amortized.
  bool note_seen(NodeId origin, std::uint32_t bid) {
    if (seen_.size() >= 64) {
      std::erase_if(seen_, [&](const auto& kv) {
        return kv.second + tuning_.seen_expiry < now();
      });
    }
    const auto key = std::make_pair(origin, bid);
    auto [it, inserted] = seen_.emplace(key, now());
    if (!inserted) {
      it->second = now();
      return false;
    }
    return true;
  }

  struct PairHash {
    std::size_t operator()(const std::pair<NodeId, std::uint32_t>& p) const {
      return std::hash<std::uint64_t>{}((std::uint64_t{p.first} << 32) | p.second);
    }
  };

  std::unordered_map<NodeId, AodvRouteEntry> table_;
  std::unordered_map<std::pair<NodeId, std::uint32_t>, SimTime, PairHash> seen_;
  std::uint32_t own_seq_ = 0;
  std::uint32_t next_bid_ = 0;
};

}  // namespace manetsim
