#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "manetsim/config.hpp"
#include "manetsim/log.hpp"
#include "manetsim/packets.hpp"
#include "manetsim/rng.hpp"
#include "manetsim/sim.hpp"
#include "manetsim/types.hpp"

namespace manetsim {

/// One radio frame: broadcast (no receiver) or unicast.
struct Frame {
  NodeId sender = kNoNode;
  std::optional<NodeId> receiver;  // nullopt = broadcast
  Packet packet;
};

/// Current movement leg of one node. Position interpolates linearly from
/// origin toward waypoint and clamps at the waypoint once arrived, which
/// also covers the pause before the next leg starts.
struct MotionState {
  Vec2 origin;
  Vec2 waypoint;
  double speed = 0.0;       // m/s; 0 = stationary
  SimTime depart_at = 0.0;
};

/// Node positions, random-waypoint movement, unit-disk connectivity and an
/// abstract acknowledged radio: fixed per-hop delay, i.i.d. frame loss and
/// bounded unicast retries. Broadcasts are never acknowledged.
class World {
 public:
  using DeliveryHandler =
      std::function<void(NodeId receiver, NodeId sender, const Packet&, double signal)>;
  using OutcomeHandler =
      std::function<void(NodeId sender, const Packet&, NodeId receiver, bool delivered)>;
  using FrameSentHandler = std::function<void(NodeId sender)>;

  World(EventQueue& sim, PacketLog& log, std::uint32_t node_count, FieldSpec field,
        RadioParams radio, MobilityParams mobility, std::uint64_t master_seed)
      : sim_(sim),
        log_(log),
        field_(field),
        radio_(radio),
        mobility_params_(mobility),
        mobility_rng_(master_seed, "mobility"),
        radio_rng_(master_seed, "radio"),
        motion_(node_count),
        disabled_(node_count, false) {}

  std::uint32_t node_count() const { return static_cast<std::uint32_t>(motion_.size()); }
  const FieldSpec& field() const { return field_; }
  const RadioParams& radio() const { return radio_; }

  void set_delivery_handler(DeliveryHandler h) { deliver_ = std::move(h); }
  void set_outcome_handler(OutcomeHandler h) { outcome_ = std::move(h); }
  void set_frame_sent_handler(FrameSentHandler h) { frame_sent_ = std::move(h); }

  /// Uniform initial positions, then independent waypoint legs per node.
  /// All draws come from the "mobility" stream in a fixed order, so the
  /// motion history depends only on (master_seed, mobility params).
  void init_random_motion() {
    for (std::uint32_t n = 0; n < node_count(); ++n) {
      motion_[n].origin = draw_point();
      motion_[n].waypoint = motion_[n].origin;
    }
    for (std::uint32_t n = 0; n < node_count(); ++n) start_leg(n);
  }

  /// Pin every node to a fixed position (static topology).
  void place_static(const std::vector<Vec2>& positions) {
    if (positions.size() != motion_.size())
      throw ConfigError("place_static: position count != node count");
    for (std::size_t n = 0; n < positions.size(); ++n) {
      motion_[n] = MotionState{positions[n], positions[n], 0.0, sim_.now()};
    }
  }

  /// Test hook: install one movement leg directly.
  void set_motion(NodeId n, MotionState m) {
    check_node(n);
    motion_[n] = m;
  }

  /// A disabled node neither sends nor receives anything.
  void set_disabled(NodeId n, bool off) {
    check_node(n);
    disabled_[n] = off;
  }
  bool disabled(NodeId n) const {
    check_node(n);
    return disabled_[n];
  }

  Vec2 position_at(NodeId n, SimTime t) const {
    check_node(n);
    const MotionState& m = motion_[n];
    if (m.speed <= 0.0 || t <= m.depart_at) return m.origin;
    const double dist = distance(m.origin, m.waypoint);
    if (dist <= 0.0) return m.origin;
    const SimTime arrive = m.depart_at + dist / m.speed;
    if (t >= arrive) return m.waypoint;
    const double f = (t - m.depart_at) * m.speed / dist;
    return Vec2{m.origin.x + f * (m.waypoint.x - m.origin.x),
                m.origin.y + f * (m.waypoint.y - m.origin.y)};
  }

  double distance_at(NodeId a, NodeId b, SimTime t) const {
    return distance(position_at(a, t), position_at(b, t));
  }

  /// Unit disk, boundary inclusive: d <= range connects.
  bool in_range(NodeId a, NodeId b, SimTime t) const {
    return distance_at(a, b, t) <= radio_.range;
  }

  std::vector<NodeId> neighbors(NodeId n, SimTime t) const {
    check_node(n);
    std::vector<NodeId> out;
    if (disabled_[n]) return out;
    for (NodeId u = 0; u < node_count(); ++u) {
      if (u == n || disabled_[u]) continue;
      if (in_range(n, u, t)) out.push_back(u);
    }
    return out;
  }

  /// s = max(0, 1 - d/range), the monotone map of distance onto [0, 1].
  double signal_strength(NodeId sender, NodeId receiver, SimTime t) const {
    const double d = distance_at(sender, receiver, t);
    const double s = 1.0 - d / radio_.range;
    return s < 0.0 ? 0.0 : s;
  }

  /// Put one frame on the air at the current time. Broadcast copies reach
  /// each current neighbor at now + hop_delay unless lost. A unicast is
  /// attempted 1 + max_retries times at retry_gap spacing; the sender's
  /// protocol hears the outcome through the outcome handler.
  void transmit(Frame frame) {
    check_node(frame.sender);
    if (disabled_[frame.sender]) return;
    const std::uint16_t att = attempt_of(frame.packet);
    log_.tx(sim_.now(), frame.sender, frame.receiver.value_or(kNoNode),
            kind_of(frame.packet), uid_of(frame.packet), att);
    if (frame.receiver) {
      check_node(*frame.receiver);
      unicast_attempt(frame, 0);
    } else {
      note_frame_sent(frame.sender);
      const SimTime t = sim_.now();
      for (NodeId u : neighbors(frame.sender, t)) {
        if (radio_rng_.chance(radio_.loss_prob)) continue;
        schedule_delivery(u, frame.sender, frame.packet);
      }
    }
  }

 private:
  static std::uint16_t attempt_of(const Packet& p) {
    if (const auto* d = std::get_if<DsrData>(&p)) return d->data.attempt;
    if (const auto* d = std::get_if<AodvData>(&p)) return d->data.attempt;
    if (const auto* d = std::get_if<EmpData>(&p)) return d->data.attempt;
    return 0;
  }

  void check_node(NodeId n) const {
    if (n >= motion_.size()) throw UnknownNode("node " + std::to_string(n));
  }

  Vec2 draw_point() {
    return Vec2{mobility_rng_.uniform(0.0, field_.width),
                mobility_rng_.uniform(0.0, field_.height)};
  }

  void start_leg(NodeId n) {
    MotionState& m = motion_[n];
    const Vec2 here = m.waypoint;  // legs begin where the previous one ended
    Vec2 next = draw_point();
    for (int tries = 0; distance(here, next) <= 0.0 && tries < 64; ++tries)
      next = draw_point();
    const double speed = mobility_rng_.uniform(mobility_params_.v_min, mobility_params_.v_max);
    m = MotionState{here, next, speed, sim_.now()};
    if (speed <= 0.0) return;  // stationary from here on
    const SimTime arrive = sim_.now() + distance(here, next) / speed;
    sim_.schedule(arrive + mobility_params_.pause, "mobility.leg", n,
                  [this, n] { start_leg(n); });
  }

  void note_frame_sent(NodeId n) {
    if (frame_sent_) frame_sent_(n);
  }

  // The frame is already in flight; only the receiver's state matters now.
  void schedule_delivery(NodeId receiver, NodeId sender, const Packet& packet) {
    sim_.schedule(sim_.now() + radio_.hop_delay, "radio.deliver", receiver,
                  [this, receiver, sender, packet] {
                    if (disabled_[receiver]) return;
                    if (deliver_)
                      deliver_(receiver, sender, packet,
                               signal_strength(sender, receiver, sim_.now()));
                  });
  }

  void unicast_attempt(const Frame& frame, int k) {
    const NodeId s = frame.sender;
    const NodeId r = *frame.receiver;
    if (disabled_[s]) return;  // sender died mid-chain; nobody to notify
    note_frame_sent(s);
    const SimTime t = sim_.now();
    bool ok = !disabled_[r] && in_range(s, r, t);
    if (ok) ok = !radio_rng_.chance(radio_.loss_prob);
    if (ok) {
      sim_.schedule(t + radio_.hop_delay, "radio.deliver", r, [this, frame] {
        const NodeId s2 = frame.sender;
        const NodeId r2 = *frame.receiver;
        // A receiver that died while the frame was in flight never acks;
        // the sender learns the link is gone.
        const bool arrived = !disabled_[r2];
        if (arrived && deliver_)
          deliver_(r2, s2, frame.packet, signal_strength(s2, r2, sim_.now()));
        if (!disabled_[s2] && outcome_) outcome_(s2, frame.packet, r2, arrived);
      });
    } else if (k < radio_.max_retries) {
      sim_.schedule(t + radio_.retry_gap, "radio.retry", s,
                    [this, frame, k] { unicast_attempt(frame, k + 1); });
    } else {
      sim_.schedule(t + radio_.hop_delay, "radio.fail", s, [this, frame] {
        if (!disabled_[frame.sender] && outcome_)
          outcome_(frame.sender, frame.packet, *frame.receiver, false);
      });
    }
  }

  EventQueue& sim_;
  PacketLog& log_;
  FieldSpec field_;
  RadioParams radio_;
  MobilityParams mobility_params_;
  RngStream mobility_rng_;
  RngStream radio_rng_;
  std::vector<MotionState> motion_;
  std::vector<bool> disabled_;
  DeliveryHandler deliver_;
  OutcomeHandler outcome_;
  FrameSentHandler frame_sent_;
};

}  // namespace manetsim
