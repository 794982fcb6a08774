#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "manetsim/config.hpp"
#include "manetsim/log.hpp"
#include "manetsim/packets.hpp"
#include "manetsim/sim.hpp"
#include "manetsim/world.hpp"

namespace manetsim {

/// Protocol timers and limits the scenario file does not expose.
struct ProtocolTuning {
  std::size_t buffer_capacity = 64;   // packets awaiting a route, per node
  double buffer_timeout = 30.0;       // seconds before a waiting packet is dropped
  double route_lifetime = 10.0;       // table/route entry lifetime, refreshed on use
  double seen_expiry = 5.0;           // RREQ duplicate-suppression window
  double discovery_retry = 1.0;       // re-flood period while packets wait
  double battery_per_frame = 1e-4;    // battery drained per transmitted frame
  double vitals_window = 1.0;         // airtime accounting window, seconds
};

/// Packets parked while route discovery runs, each stamped with its
/// enqueue time. Oldest entry is evicted on overflow; the owner handles
/// timeouts through remove_uid().
class SendBuffer {
 public:
  explicit SendBuffer(std::size_t capacity) : capacity_(capacity) {}

  /// Returns the evicted oldest packet when the buffer was full.
  std::optional<DataPacket> push(DataPacket d, SimTime at) {
    std::optional<DataPacket> evicted;
    if (items_.size() >= capacity_) {
      evicted = items_.front().packet;
      items_.pop_front();
    }
    items_.push_back(Item{std::move(d), at});
    return evicted;
  }

  bool has_for(NodeId dst) const {
    for (const auto& it : items_)
      if (it.packet.dst == dst) return true;
    return false;
  }

  /// Remove and return, in enqueue order, every packet bound for dst.
  std::vector<DataPacket> take_for(NodeId dst) {
    std::vector<DataPacket> out;
    for (auto it = items_.begin(); it != items_.end();) {
      if (it->packet.dst == dst) {
        out.push_back(it->packet);
        it = items_.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

  std::optional<DataPacket> remove_uid(std::uint64_t uid) {
    for (auto it = items_.begin(); it != items_.end(); ++it) {
      if (it->packet.uid == uid) {
        DataPacket p = it->packet;
        items_.erase(it);
        return p;
      }
    }
    return std::nullopt;
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  struct Item {
    DataPacket packet;
    SimTime enqueued_at = 0.0;
  };
  std::deque<Item> items_;
  std::size_t capacity_;
};

/// Per-node protocol state machine. The world calls back into on_receive /
/// on_unicast_outcome / on_frame_sent; the traffic generator calls
/// originate. All mutation happens on the owning node's events.
class RoutingProtocol {
 public:
  RoutingProtocol(EventQueue& sim, World& world, PacketLog& log,
                  const ScenarioConfig& cfg, const ProtocolTuning& tuning, NodeId self)
      : sim_(sim),
        world_(world),
        log_(log),
        cfg_(cfg),
        tuning_(tuning),
        self_(self),
        buffer_(tuning.buffer_capacity) {}

  virtual ~RoutingProtocol() = default;

  NodeId id() const { return self_; }

  /// Called once before the run starts (periodic beacons live here).
  virtual void start() {}

  /// New application packet from the local node. Logs the origination.
  void originate(DataPacket d) {
    log_.originate(sim_.now(), d);
    if (d.dst == self_) {
      log_.deliver(sim_.now(), self_, d);
      return;
    }
    dispatch(d);
  }

  virtual void on_receive(const Packet& p, NodeId from, double signal) = 0;
  virtual void on_unicast_outcome(const Packet& p, NodeId to, bool delivered) = 0;
  virtual void on_frame_sent() {}

  /// Data packets still waiting for a route (conservation accounting).
  std::size_t pending_count() const { return buffer_.size(); }

 protected:
  /// Route lookup + send, or buffer + discovery. No origination logging;
  /// also the re-entry point after link failures.
  virtual void dispatch(DataPacket d) = 0;

  /// Issue one protocol-specific route request flood for dst.
  virtual void send_discovery(NodeId dst) = 0;

  SimTime now() const { return sim_.now(); }

  void send_broadcast(Packet p) { world_.transmit(Frame{self_, std::nullopt, std::move(p)}); }
  void send_unicast(NodeId to, Packet p) { world_.transmit(Frame{self_, to, std::move(p)}); }

  /// Park a packet until a route shows up. Handles overflow eviction and
  /// schedules the timeout drop.
  void buffer_packet(DataPacket d) {
    const std::uint64_t uid = d.uid;
    if (auto evicted = buffer_.push(std::move(d), sim_.now()))
      log_.drop(sim_.now(), self_, *evicted, DropReason::BufferFull);
    sim_.schedule(sim_.now() + tuning_.buffer_timeout, "buffer.timeout", self_, [this, uid] {
      if (auto p = buffer_.remove_uid(uid))
        log_.drop(sim_.now(), self_, *p, DropReason::BufferTimeout);
    });
  }

  /// Start a discovery cycle unless one is already pending.
  void ensure_discovery(NodeId dst) {
    if (pending_.count(dst)) return;
    force_discovery(dst);
  }

  /// Flood now and restart the retry timer, superseding any pending cycle.
  void force_discovery(NodeId dst) {
    const std::uint64_t epoch = ++next_epoch_;
    pending_[dst] = epoch;
    send_discovery(dst);
    schedule_retry(dst, epoch);
  }

  /// Route learned; stop re-flooding.
  void finish_discovery(NodeId dst) { pending_.erase(dst); }

  bool discovery_pending(NodeId dst) const { return pending_.count(dst) != 0; }

  std::vector<DataPacket> take_buffered(NodeId dst) { return buffer_.take_for(dst); }
  bool has_buffered(NodeId dst) const { return buffer_.has_for(dst); }

  EventQueue& sim_;
  World& world_;
  PacketLog& log_;
  const ScenarioConfig& cfg_;
  ProtocolTuning tuning_;
  NodeId self_;
  SendBuffer buffer_;

 private:
  void schedule_retry(NodeId dst, std::uint64_t epoch) {
    sim_.schedule(sim_.now() + tuning_.discovery_retry, "discovery.retry", self_,
                  [this, dst, epoch] {
                    auto it = pending_.find(dst);
                    if (it == pending_.end() || it->second != epoch) return;
                    if (!buffer_.has_for(dst)) {
                      pending_.erase(it);
                      return;
                    }
                    send_discovery(dst);
                    schedule_retry(dst, epoch);
                  });
  }

  std::unordered_map<NodeId, std::uint64_t> pending_;
  std::uint64_t next_epoch_ = 0;
};

}  // namespace manetsim
