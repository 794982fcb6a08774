#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "manetsim/routing.hpp"

namespace manetsim {

/// Dynamic Source Routing. Discovery floods a route request that collects
/// the node list it traverses; the target unwinds a route reply along the
/// reversed record; data travels with the full source route in its header.
/// Broken links propagate a route error back toward the packet source and
/// purge every cached route using the dead link.
class DsrNode : public RoutingProtocol {
 public:
  using RoutingProtocol::RoutingProtocol;

  void on_receive(const Packet& p, NodeId from, double /*signal*/) override {
    if (const auto* rreq = std::get_if<DsrRreq>(&p)) handle_rreq(*rreq);
    else if (const auto* rrep = std::get_if<DsrRrep>(&p)) handle_rrep(*rrep);
    else if (const auto* rerr = std::get_if<DsrRerr>(&p)) handle_rerr(*rerr);
    else if (const auto* data = std::get_if<DsrData>(&p)) handle_data(*data, from);
  }

  void on_unicast_outcome(const Packet& p, NodeId to, bool delivered) override {
    if (delivered) return;
    if (const auto* data = std::get_if<DsrData>(&p)) {
      handle_send_failure(to, *data);
    } else if (std::holds_alternative<DsrRrep>(p) || std::holds_alternative<DsrRerr>(p)) {
      // Reply or error lost on a dead link: purge it and give up on the
      // message. Discovery re-fires from the waiting packets' retry cycle.
      purge_link(self_, to);
    }
  }

  // --- read-only views (tests, metrics) ---------------------------------

  /// Best cached route to dst: fewest hops, ties by lexicographic node order.
  const std::vector<NodeId>* best_route(NodeId dst) const {
    auto it = cache_.find(dst);
    if (it == cache_.end() || it->second.empty()) return nullptr;
    const std::vector<NodeId>* best = &it->second.front();
    for (const auto& r : it->second)
      if (r.size() < best->size() || (r.size() == best->size() && r < *best)) best = &r;
    return best;
  }

  std::size_t cached_route_count(NodeId dst) const {
    auto it = cache_.find(dst);
    return it == cache_.end() ? 0 : it->second.size();
  }

  const std::unordered_map<NodeId, std::vector<std::vector<NodeId>>>& cache() const {
    return cache_;
  }

  /// Test hook: seed the cache directly (pre-warmed scenarios).
  void add_cache_route(const std::vector<NodeId>& route) { cache_add(route); }

 protected:
  void dispatch(DataPacket d) override {
    if (d.dst == self_) {  // re-entry safety; originate() handles delivery
      log_.deliver(now(), self_, d);
      return;
    }
    if (const auto* route = best_route(d.dst)) {
      send_along(*route, d);
      return;
    }
    buffer_packet(d);
    ensure_discovery(d.dst);
  }

  void send_discovery(NodeId dst) override {
    const std::uint32_t id = next_request_id_++;
    seen_.insert({self_, id});
    DsrRreq rreq;
    rreq.uid = log_.new_uid();
    rreq.initiator = self_;
    rreq.request_id = id;
    rreq.target = dst;
    rreq.record = {self_};
    send_broadcast(Packet{std::move(rreq)});
  }

 private:
  void handle_rreq(const DsrRreq& rreq) {
    if (seen_.count({rreq.initiator, rreq.request_id})) return;
    if (std::find(rreq.record.begin(), rreq.record.end(), self_) != rreq.record.end())
      return;
    seen_.insert({rreq.initiator, rreq.request_id});
    if (rreq.target == self_) {
      DsrRrep rrep;
      rrep.uid = log_.new_uid();
      rrep.route = rreq.record;
      rrep.route.push_back(self_);
      rrep.holder = static_cast<std::uint32_t>(rrep.route.size() - 1);
      forward_rrep(std::move(rrep));
      return;
    }
    DsrRreq fwd = rreq;
    fwd.record.push_back(self_);
    send_broadcast(Packet{std::move(fwd)});
  }

  void forward_rrep(DsrRrep rrep) {
    if (rrep.holder == 0) return;
    rrep.holder -= 1;
    const NodeId next = rrep.route[rrep.holder];
    send_unicast(next, Packet{std::move(rrep)});
  }

  void handle_rrep(const DsrRrep& rrep) {
    if (rrep.holder >= rrep.route.size() || rrep.route[rrep.holder] != self_) return;
    if (rrep.holder == 0) {
      // Initiator: the route enters the cache, waiting packets flush.
      const NodeId dst = rrep.route.back();
      cache_add(rrep.route);
      finish_discovery(dst);
      for (DataPacket& d : take_buffered(dst)) dispatch(std::move(d));
      return;
    }
    forward_rrep(rrep);
  }

  void handle_data(const DsrData& msg, NodeId /*from*/) {
    if (msg.hop >= msg.route.size() || msg.route[msg.hop] != self_) return;
    if (msg.hop + 1 == msg.route.size()) {
      log_.deliver(now(), self_, msg.data);
      return;
    }
    log_.rx(now(), self_, msg.route[msg.hop - 1], PacketKind::Data, msg.data.uid,
            msg.data.attempt);
    DsrData fwd = msg;
    fwd.hop += 1;
    const NodeId next = fwd.route[fwd.hop];
    send_unicast(next, Packet{std::move(fwd)});
  }

  /// Link-layer gave up on (self, next). Purge, report back toward the
  /// source, and either retry locally (we are the source) or drop.
  void handle_send_failure(NodeId next, const DsrData& msg) {
    purge_link(self_, next);
    if (msg.data.src == self_) {
      DataPacket retry = msg.data;
      retry.attempt += 1;
      dispatch(std::move(retry));
      return;
    }
    log_.drop(now(), self_, msg.data, DropReason::LinkBreak);
    // Route error retraces the prefix this packet already travelled.
    const std::size_t my_idx = msg.hop;  // route[hop] == self_
    DsrRerr rerr;
    rerr.uid = log_.new_uid();
    rerr.from = self_;
    rerr.to = next;
    rerr.data_dst = msg.data.dst;
    for (std::size_t i = 0; i <= my_idx; ++i)
      rerr.back_path.push_back(msg.route[my_idx - i]);
    rerr.holder = 0;
    forward_rerr(std::move(rerr));
  }

  void forward_rerr(DsrRerr rerr) {
    if (rerr.holder + 1 >= rerr.back_path.size()) return;
    rerr.holder += 1;
    const NodeId next = rerr.back_path[rerr.holder];
    send_unicast(next, Packet{std::move(rerr)});
  }

  void handle_rerr(const DsrRerr& rerr) {
    if (rerr.holder >= rerr.back_path.size() || rerr.back_path[rerr.holder] != self_) return;
    purge_link(rerr.from, rerr.to);
    if (rerr.holder + 1 == rerr.back_path.size()) {
      // Reached the packet source. Re-discover right away if traffic is
      // stuck and the purge left no usable route.
      if (has_buffered(rerr.data_dst) && best_route(rerr.data_dst) == nullptr)
        force_discovery(rerr.data_dst);
      return;
    }
    forward_rerr(rerr);
  }

  void send_along(const std::vector<NodeId>& route, DataPacket d) {
    DsrData msg;
    msg.data = std::move(d);
    msg.route = route;
    msg.hop = 1;
    const NodeId next = msg.route[1];
    send_unicast(next, Packet{std::move(msg)});
  }

  void cache_add(const std::vector<NodeId>& route) {
    if (route.size() < 2 || route.front() != self_) return;
    auto& routes = cache_[route.back()];
    if (std::find(routes.begin(), routes.end(), route) != routes.end()) return;
    routes.push_back(route);
  }

  /// Remove every cached route that crosses the (undirected) link (a, b).
  void purge_link(NodeId a, NodeId b) {
    for (auto& [dst, routes] : cache_) {
      std::erase_if(routes, [&](const std::vector<NodeId>& r) {
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
          if ((r[i] == a && r[i + 1] == b) || (r[i] == b && r[i + 1] == a)) return true;
        }
        return false;
      });
    }
  }

  std::unordered_map<NodeId, std::vector<std::vector<NodeId>>> cache_;
  std::set<std::pair<NodeId, std::uint32_t>> seen_;
  std::uint32_t next_request_id_ = 0;
};

}  // namespace manetsim
