#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "manetsim/routing.hpp"

namespace manetsim {

enum class NeighborState : std::uint8_t { Unknown, Stable, Unstable };

inline const char* neighbor_state_name(NeighborState s) {
  switch (s) {
    case NeighborState::Unknown: return "UNKNOWN";
    case NeighborState::Stable: return "STABLE";
    case NeighborState::Unstable: return "UNSTABLE";
  }
  return "?";
}

/// STABLE when the last k signal samples all clear theta; UNKNOWN until k
/// samples exist; UNSTABLE otherwise.
inline NeighborState classify_neighbor(const std::vector<double>& recent_signals,
                                       std::size_t k, double theta) {
  if (recent_signals.size() < k) return NeighborState::Unknown;
  for (std::size_t i = recent_signals.size() - k; i < recent_signals.size(); ++i)
    if (recent_signals[i] < theta) return NeighborState::Unstable;
  return NeighborState::Stable;
}

/// Weighted blend of link quality, remaining battery and free bandwidth,
/// normalized into [0, 1].
inline double stability_score(double signal, double battery, double resource_usage,
                              const EmpParams& p) {
  const double wsum = p.w_signal + p.w_battery + p.w_bandwidth;
  return (p.w_signal * signal + p.w_battery * battery +
          p.w_bandwidth * (1.0 - resource_usage)) / wsum;
}

/// One neighbor row of the enquiry table.
struct SonnetEntry {
  NodeId ip_address = kNoNode;
  NodeId mac_address = kNoNode;
  std::uint32_t em_counter = 0;
  SimTime time_stamp = 0.0;
  NeighborState neighbor_state = NeighborState::Unknown;
  double resource_usage_pct = 0.0;
  double battery_power_left = 0.0;
  double signal_strength = 0.0;
  SimTime created_at = 0.0;
  std::vector<double> recent_signals;  // most recent last, capped at k
};

/// One forwarding option toward a destination. last_hop names the node
/// adjacent to the destination on this path; keeping next_hops and
/// last_hops pairwise distinct is what makes the path set link-disjoint.
struct PathEntry {
  NodeId next_hop = kNoNode;
  NodeId last_hop = kNoNode;
  std::uint32_t hop_count = 0;
};

struct MultipathRoute {
  std::uint32_t dest_seq = 0;  // 0 = never learned; real sequences start at 1
  std::uint32_t advertised_hop_count = 0;  // frozen per dest_seq
  std::vector<PathEntry> paths;
  SimTime expires_at = 0.0;
  std::uint64_t rr_counter = 0;  // round-robin cursor for banded next hops
};

enum class PathUpdate : std::uint8_t { NewRoute, NewPath, Refreshed, Rejected };

/// Route advertisement acceptance rule. A newer sequence restarts the path
/// set and freezes the advertised hop count; within one sequence only
/// strictly shorter advertisements join, and only on fresh (next_hop,
/// last_hop) pairs.
inline PathUpdate apply_advert(MultipathRoute& route, std::uint32_t seq,
                               std::uint32_t advert_hops, NodeId via, NodeId last_hop,
                               SimTime now, double lifetime) {
  if (seq > route.dest_seq) {
    route.dest_seq = seq;
    route.advertised_hop_count = advert_hops + 1;
    route.paths.assign(1, PathEntry{via, last_hop, advert_hops + 1});
    route.expires_at = now + lifetime;
    return PathUpdate::NewRoute;
  }
  if (seq < route.dest_seq) return PathUpdate::Rejected;
  for (PathEntry& p : route.paths) {
    if (p.next_hop == via && p.last_hop == last_hop) {
      if (p.hop_count != advert_hops + 1) return PathUpdate::Rejected;
      route.expires_at = std::max(route.expires_at, now + lifetime);
      return PathUpdate::Refreshed;
    }
  }
  if (advert_hops >= route.advertised_hop_count) return PathUpdate::Rejected;
  for (const PathEntry& p : route.paths)
    if (p.next_hop == via || p.last_hop == last_hop) return PathUpdate::Rejected;
  route.paths.push_back(PathEntry{via, last_hop, advert_hops + 1});
  route.expires_at = std::max(route.expires_at, now + lifetime);
  return PathUpdate::NewPath;
}

/// The enhanced multipath protocol: on-demand discovery in the AODV style,
/// extended so a single flood yields several loop-free link-disjoint paths
/// per destination, plus the per-node enquiry table fed by periodic
/// one-hop beacons. Each data packet picks its next hop from the live
/// table instead of committing to one path at discovery time.
class EmpNode : public RoutingProtocol {
 public:
  using RoutingProtocol::RoutingProtocol;

  void start() override {
    sim_.schedule(sim_.now(), "emp.beacon", self_, [this] { beacon_tick(); });
  }

  void on_receive(const Packet& p, NodeId from, double signal) override {
    if (const auto* enq = std::get_if<Enquiry>(&p)) handle_enquiry(*enq, from, signal);
    else if (const auto* rreq = std::get_if<EmpRreq>(&p)) handle_rreq(*rreq, from);
    else if (const auto* rrep = std::get_if<EmpRrep>(&p)) handle_rrep(*rrep, from);
    else if (const auto* rerr = std::get_if<EmpRerr>(&p)) handle_rerr(*rerr, from);
    else if (const auto* data = std::get_if<EmpData>(&p)) handle_data(*data, from);
  }

  void on_unicast_outcome(const Packet& p, NodeId to, bool delivered) override {
    if (delivered) return;
    handle_link_failure(to);
    if (const auto* data = std::get_if<EmpData>(&p)) salvage(data->data);
  }

  void on_frame_sent() override {
    frames_sent_ += 1;
    recent_tx_.push_back(now());
  }

  // --- read-only views ---------------------------------------------------

  const std::unordered_map<NodeId, SonnetEntry>& sonnet_table() const { return sonnet_; }

  const MultipathRoute* route(NodeId dst) const {
    auto it = routes_.find(dst);
    return it == routes_.end() ? nullptr : &it->second;
  }

  /// Linear drain, one charge unit per frame, computed from the frame
  /// count so exact multiples land exactly on zero.
  double battery() const {
    const double level =
        battery_base_ -
        static_cast<double>(frames_sent_ - frames_at_base_) * tuning_.battery_per_frame;
    return level > 0.0 ? level : 0.0;
  }

  /// Fraction of the trailing window spent transmitting.
  double bandwidth_usage() {
    while (!recent_tx_.empty() && recent_tx_.front() < now() - tuning_.vitals_window)
      recent_tx_.pop_front();
    const double used =
        static_cast<double>(recent_tx_.size()) * cfg_.radio.hop_delay / tuning_.vitals_window;
    return std::min(1.0, used);
  }

  /// Disjointness self-checks that failed (acceptance instrumentation).
  std::uint64_t disjointness_violations() const { return disjointness_violations_; }

  /// Test hook: drain the battery to a given level.
  void set_battery(double b) {
    battery_base_ = b;
    frames_at_base_ = frames_sent_;
  }

 protected:
  void dispatch(DataPacket d) override {
    if (d.dst == self_) {
      log_.deliver(now(), self_, d);
      return;
    }
    if (MultipathRoute* r = usable(d.dst)) {
      forward_via(*r, std::move(d));
      return;
    }
    buffer_packet(d);
    ensure_discovery(d.dst);
  }

  void send_discovery(NodeId dst) override {
    own_seq_ += 1;
    const std::uint32_t bid = next_bid_++;
    note_seen(self_, bid);
    EmpRreq rreq;
    rreq.uid = log_.new_uid();
    rreq.origin = self_;
    rreq.broadcast_id = bid;
    rreq.origin_seq = own_seq_;
    rreq.dst = dst;
    if (auto it = routes_.find(dst); it != routes_.end() && it->second.dest_seq > 0) {
      rreq.dst_seq = it->second.dest_seq;
      rreq.dst_seq_valid = true;
    }
    rreq.hop_count = 0;
    rreq.first_hop = kNoNode;
    send_guarded_broadcast(Packet{std::move(rreq)});
  }

 private:
  struct DiscoveryMarks {
    SimTime at = 0.0;
    std::uint32_t reply_seq = 0;
    bool reply_seq_set = false;
    std::vector<std::pair<NodeId, NodeId>> used_reverse;  // (next_hop, last_hop)
    std::vector<std::pair<NodeId, NodeId>> used_forward;
  };

  // --- enquiry table -----------------------------------------------------

  void beacon_tick() {
    if (now() >= cfg_.duration) return;
    prune_stale_rows();
    if (battery() > 0.0) {
      Enquiry e;
      e.uid = log_.new_uid();
      e.sender = self_;
      e.battery = battery();
      e.bandwidth_usage = bandwidth_usage();
      send_broadcast(Packet{std::move(e)});
    }
    sim_.schedule(now() + cfg_.emp.t_enq, "emp.beacon", self_, [this] { beacon_tick(); });
  }

  void prune_stale_rows() {
    const double stale_after = 3.0 * cfg_.emp.t_enq;
    std::erase_if(sonnet_, [&](const auto& kv) {
      return kv.second.time_stamp + stale_after < now();
    });
  }

  void handle_enquiry(const Enquiry& e, NodeId from, double signal) {
    log_.rx(now(), self_, from, PacketKind::Enquiry, e.uid);
    auto [it, created] = sonnet_.try_emplace(from);
    SonnetEntry& row = it->second;
    if (created) {
      row.ip_address = from;
      row.mac_address = from;
      row.created_at = now();
    }
    row.em_counter += 1;
    row.time_stamp = now();
    row.resource_usage_pct = e.bandwidth_usage;
    row.battery_power_left = e.battery;
    row.signal_strength = signal;
    row.recent_signals.push_back(signal);
    const std::size_t k = static_cast<std::size_t>(cfg_.emp.k);
    if (row.recent_signals.size() > k)
      row.recent_signals.erase(row.recent_signals.begin(),
                               row.recent_signals.end() - k);
    row.neighbor_state = classify_neighbor(row.recent_signals, k, cfg_.emp.theta);
  }

  // --- multipath discovery ------------------------------------------------

  void handle_rreq(const EmpRreq& rreq, NodeId from) {
    if (rreq.origin == self_) return;
    const bool dup = !note_seen(rreq.origin, rreq.broadcast_id);
    // Duplicate copies still carry usable path information; only the
    // rebroadcast is suppressed.
    const NodeId last_hop = (rreq.hop_count == 0) ? self_ : rreq.first_hop;
    MultipathRoute& rev = routes_[rreq.origin];
    const PathUpdate upd = apply_advert(rev, rreq.origin_seq, rreq.hop_count, from,
                                        last_hop, now(), tuning_.route_lifetime);
    if (upd == PathUpdate::NewRoute || upd == PathUpdate::NewPath) {
      check_disjoint(rev);
      flush_if_routable(rreq.origin);
    }
    if (rreq.dst == self_) {
      DiscoveryMarks& marks = discovery_marks(rreq.origin, rreq.broadcast_id);
      if (!marks.reply_seq_set) {
        own_seq_ = std::max(own_seq_, rreq.dst_seq_valid ? rreq.dst_seq : 0) + 1;
        marks.reply_seq = own_seq_;
        marks.reply_seq_set = true;
      }
      // One reply per accepted path so the origin can collect a disjoint set.
      if (upd == PathUpdate::NewRoute || upd == PathUpdate::NewPath) {
        EmpRrep rrep;
        rrep.uid = log_.new_uid();
        rrep.origin = rreq.origin;
        rrep.broadcast_id = rreq.broadcast_id;
        rrep.dst = self_;
        rrep.dst_seq = marks.reply_seq;
        rrep.hop_count = 0;
        rrep.first_hop = from;
        send_guarded_unicast(from, Packet{std::move(rrep)});
      }
      return;
    }
    if (dup || upd == PathUpdate::Rejected) return;
    EmpRreq fwd = rreq;
    fwd.hop_count = rev.advertised_hop_count;
    fwd.first_hop = rev.paths.front().last_hop;
    send_guarded_broadcast(Packet{std::move(fwd)});
  }

  void handle_rrep(const EmpRrep& rrep, NodeId from) {
    MultipathRoute& fwd_route = routes_[rrep.dst];
    const PathUpdate upd = apply_advert(fwd_route, rrep.dst_seq, rrep.hop_count, from,
                                        rrep.first_hop, now(), tuning_.route_lifetime);
    if (upd == PathUpdate::Rejected) return;
    if (upd != PathUpdate::Refreshed) check_disjoint(fwd_route);
    if (rrep.origin == self_) {
      finish_discovery(rrep.dst);
      for (DataPacket& d : take_buffered(rrep.dst)) dispatch(std::move(d));
      return;
    }
    // Relay the reply toward the origin along a reverse path not yet used
    // for this discovery; skip if this forward path already answered.
    MultipathRoute* rev = usable(rrep.origin);
    if (!rev) return;
    DiscoveryMarks& marks = discovery_marks(rrep.origin, rrep.broadcast_id);
    const std::pair<NodeId, NodeId> fwd_key{from, rrep.first_hop};
    if (contains(marks.used_forward, fwd_key)) return;
    const PathEntry* back = nullptr;
    for (const PathEntry& p : rev->paths) {
      if (!contains(marks.used_reverse, {p.next_hop, p.last_hop})) {
        back = &p;
        break;
      }
    }
    if (!back) return;
    marks.used_forward.push_back(fwd_key);
    marks.used_reverse.emplace_back(back->next_hop, back->last_hop);
    rev->expires_at = std::max(rev->expires_at, now() + tuning_.route_lifetime);
    EmpRrep out = rrep;
    out.hop_count = fwd_route.advertised_hop_count;
    send_guarded_unicast(back->next_hop, Packet{std::move(out)});
  }

  // --- data plane ---------------------------------------------------------

  void handle_data(const EmpData& msg, NodeId from) {
    if (msg.data.dst == self_) {
      log_.deliver(now(), self_, msg.data);
      return;
    }
    log_.rx(now(), self_, from, PacketKind::Data, msg.data.uid, msg.data.attempt);
    if (MultipathRoute* r = usable(msg.data.dst)) {
      forward_via(*r, msg.data);
      return;
    }
    drop_no_route(msg.data);
  }

  void forward_via(MultipathRoute& route, DataPacket d) {
    if (battery() <= 0.0) {
      log_.drop(now(), self_, d, DropReason::NodeDead);
      return;
    }
    route.expires_at = std::max(route.expires_at, now() + tuning_.route_lifetime);
    const NodeId next = select_next_hop(route, d.dst);
    send_unicast(next, Packet{EmpData{std::move(d)}});
  }

  /// Per-packet next-hop choice: prefer STABLE rows, take the best score,
  /// and rotate round-robin among scores within epsilon of the best.
  NodeId select_next_hop(MultipathRoute& route, NodeId dst) {
    std::vector<const PathEntry*> known;
    for (const PathEntry& p : route.paths)
      if (sonnet_.count(p.next_hop)) known.push_back(&p);
    if (known.empty()) {
      // Nothing in the table about any next hop: take the shortest path
      // and line up a fresh discovery.
      const PathEntry* best = &route.paths.front();
      for (const PathEntry& p : route.paths) {
        if (p.hop_count < best->hop_count ||
            (p.hop_count == best->hop_count && p.next_hop < best->next_hop))
          best = &p;
      }
      if (!discovery_pending(dst)) ensure_discovery(dst);
      return best->next_hop;
    }
    std::vector<const PathEntry*> pool;
    for (const PathEntry* p : known)
      if (sonnet_.at(p->next_hop).neighbor_state == NeighborState::Stable)
        pool.push_back(p);
    if (pool.empty()) pool = known;
    double best_score = -1.0;
    for (const PathEntry* p : pool) best_score = std::max(best_score, score_of(*p));
    std::vector<const PathEntry*> band;
    for (const PathEntry* p : pool)
      if (score_of(*p) >= best_score - cfg_.emp.epsilon) band.push_back(p);
    std::sort(band.begin(), band.end(), [](const PathEntry* a, const PathEntry* b) {
      if (a->hop_count != b->hop_count) return a->hop_count < b->hop_count;
      return a->next_hop < b->next_hop;
    });
    const PathEntry* pick = band[route.rr_counter % band.size()];
    route.rr_counter += 1;
    return pick->next_hop;
  }

  double score_of(const PathEntry& p) const {
    const SonnetEntry& row = sonnet_.at(p.next_hop);
    return stability_score(row.signal_strength, row.battery_power_left,
                           row.resource_usage_pct, cfg_.emp);
  }

  // --- failure handling ----------------------------------------------------

  /// Peel every path through the dead neighbor; routes left with no paths
  /// are advertised unreachable.
  void handle_link_failure(NodeId dead) {
    std::vector<std::pair<NodeId, std::uint32_t>> lost;
    for (auto& [dst, route] : routes_) {
      if (route.paths.empty()) continue;
      const std::size_t before = route.paths.size();
      std::erase_if(route.paths, [&](const PathEntry& p) { return p.next_hop == dead; });
      if (route.paths.empty() && before > 0) {
        route.dest_seq += 1;
        lost.emplace_back(dst, route.dest_seq);
      }
    }
    if (!lost.empty()) {
      EmpRerr rerr;
      rerr.uid = log_.new_uid();
      rerr.unreachable = std::move(lost);
      send_guarded_broadcast(Packet{std::move(rerr)});
    }
  }

  /// A send failed but the packet never left this node. The source may
  /// re-dispatch over a surviving path right away; a relay drops it. A
  /// relayed packet re-routed here could straddle a route-sequence change
  /// and revisit its own upstream, so only fresh dispatches retry.
  void salvage(const DataPacket& d) {
    if (d.src != self_) {
      log_.drop(now(), self_, d, DropReason::LinkBreak);
      return;
    }
    if (MultipathRoute* r = usable(d.dst)) {
      forward_via(*r, d);
      return;
    }
    DataPacket retry = d;
    retry.attempt += 1;
    buffer_packet(std::move(retry));
    ensure_discovery(d.dst);
  }

  void drop_no_route(const DataPacket& d) {
    log_.drop(now(), self_, d, DropReason::NoRoute);
    std::uint32_t seq = 1;
    if (auto it = routes_.find(d.dst); it != routes_.end()) {
      // Declaring the destination unreachable moves the entry to a new
      // sequence; paths from the old one must not survive under it.
      it->second.dest_seq += 1;
      it->second.paths.clear();
      seq = it->second.dest_seq;
    }
    EmpRerr rerr;
    rerr.uid = log_.new_uid();
    rerr.unreachable.emplace_back(d.dst, seq);
    send_guarded_broadcast(Packet{std::move(rerr)});
  }

  void handle_rerr(const EmpRerr& rerr, NodeId from) {
    std::vector<std::pair<NodeId, std::uint32_t>> lost;
    for (const auto& [dst, seq] : rerr.unreachable) {
      auto it = routes_.find(dst);
      if (it != routes_.end() && !it->second.paths.empty()) {
        MultipathRoute& route = it->second;
        const std::size_t before = route.paths.size();
        std::erase_if(route.paths, [&](const PathEntry& p) { return p.next_hop == from; });
        if (route.paths.empty() && before > 0) {
          route.dest_seq = std::max(route.dest_seq + 1, seq);
          lost.emplace_back(dst, route.dest_seq);
        }
      }
      if (has_buffered(dst) && !usable(dst)) force_discovery(dst);
    }
    if (lost.empty()) return;
    EmpRerr fwd;
    fwd.uid = log_.new_uid();
    fwd.unreachable = std::move(lost);
    send_guarded_broadcast(Packet{std::move(fwd)});
  }

  // --- plumbing -------------------------------------------------------------

  MultipathRoute* usable(NodeId dst) {
    auto it = routes_.find(dst);
    if (it == routes_.end()) return nullptr;
    MultipathRoute& r = it->second;
    if (r.paths.empty() || r.expires_at < now()) return nullptr;
    return &r;
  }

  void flush_if_routable(NodeId dst) {
    if (!usable(dst) || !has_buffered(dst)) return;
    finish_discovery(dst);
    for (DataPacket& d : take_buffered(dst)) dispatch(std::move(d));
  }

  /// Battery-gated sends: a drained node stops transmitting.
  void send_guarded_broadcast(Packet p) {
    if (battery() <= 0.0) return;
    send_broadcast(std::move(p));
  }
  void send_guarded_unicast(NodeId to, Packet p) {
    if (battery() <= 0.0) return;
    send_unicast(to, std::move(p));
  }

  void check_disjoint(const MultipathRoute& route) {
    for (std::size_t i = 0; i < route.paths.size(); ++i) {
      for (std::size_t j = i + 1; j < route.paths.size(); ++j) {
        if (route.paths[i].next_hop == route.paths[j].next_hop ||
            route.paths[i].last_hop == route.paths[j].last_hop)
          ++disjointness_violations_;
      }
    }
  }

  static bool contains(const std::vector<std::pair<NodeId, NodeId>>& v,
                       const std::pair<NodeId, NodeId>& key) {
    return std::find(v.begin(), v.end(), key) != v.end();
  }

  DiscoveryMarks& discovery_marks(NodeId origin, std::uint32_t bid) {
    return disc_[std::make_pair(origin, bid)];
  }

  bool note_seen(NodeId origin, std::uint32_t bid) {
    if (disc_.size() >= 64) {
      std::erase_if(disc_, [&](const auto& kv) {
        return kv.second.at + tuning_.seen_expiry < now();
      });
    }
    auto [it, inserted] = disc_.try_emplace(std::make_pair(origin, bid));
    it->second.at = now();
    return inserted;
  }

  struct PairHash {
    std::size_t operator()(const std::pair<NodeId, std::uint32_t>& p) const {
      return std::hash<std::uint64_t>{}((std::uint64_t{p.first} << 32) | p.second);
    }
  };

  std::unordered_map<NodeId, MultipathRoute> routes_;
  std::unordered_map<NodeId, SonnetEntry> sonnet_;
  std::unordered_map<std::pair<NodeId, std::uint32_t>, DiscoveryMarks, PairHash> disc_;
  std::uint32_t own_seq_ = 0;
  std::uint32_t next_bid_ = 0;
  double battery_base_ = 1.0;
  std::uint64_t frames_sent_ = 0;
  std::uint64_t frames_at_base_ = 0;
  std::deque<SimTime> recent_tx_;
  std::uint64_t disjointness_violations_ = 0;
};

}  // namespace manetsim
