#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "manetsim/aodv.hpp"
#include "manetsim/config.hpp"
#include "manetsim/dsr.hpp"
#include "manetsim/emp.hpp"
#include "manetsim/log.hpp"
#include "manetsim/routing.hpp"
#include "manetsim/sim.hpp"
#include "manetsim/world.hpp"

namespace manetsim {

/// Constant-bit-rate flow: packets at exactly 1/rate spacing from start_at
/// until the scenario ends.
struct CbrFlow {
  NodeId source = kNoNode;
  NodeId sink = kNoNode;
  double rate = 4.0;
  SimTime start_at = 0.0;
};

/// Draw the configured number of flows: distinct sources (uniform, without
/// replacement), a sink per flow drawn uniformly among the other nodes,
/// and a start phase inside the first inter-packet gap.
inline std::vector<CbrFlow> generate_traffic(const ScenarioConfig& cfg, RngStream& rng) {
  if (cfg.source_count > cfg.node_count)
    throw TooManySources("source_count exceeds node_count");
  std::vector<NodeId> ids(cfg.node_count);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::uint32_t i = 0; i < cfg.source_count; ++i) {
    const std::uint64_t j = i + rng.uniform_u64(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  std::vector<CbrFlow> flows;
  flows.reserve(cfg.source_count);
  for (std::uint32_t i = 0; i < cfg.source_count; ++i) {
    CbrFlow f;
    f.source = ids[i];
    std::uint64_t pick = rng.uniform_u64(cfg.node_count - 1);
    if (pick >= f.source) ++pick;  // skip self
    f.sink = static_cast<NodeId>(pick);
    f.rate = cfg.cbr_rate;
    f.start_at = rng.uniform(0.0, 1.0 / cfg.cbr_rate);
    flows.push_back(f);
  }
  return flows;
}

/// Counters gathered when a run finishes.
struct RunStats {
  MetricsSummary metrics;
  std::uint64_t still_buffered = 0;
  std::uint64_t disjointness_violations = 0;
  EventTrace trace;
};

/// One complete deterministic run: engine, world, one protocol instance
/// per node, traffic, and the packet log. Everything is owned here; two
/// Simulations never share mutable state.
class Simulation {
 public:
  /// Scenario exactly as configured: random waypoint motion and randomly
  /// drawn CBR flows.
  explicit Simulation(const ScenarioConfig& cfg) : Simulation(cfg, nullptr) {
    world_.init_random_motion();
    RngStream traffic_rng(cfg_.master_seed, "traffic");
    for (const CbrFlow& f : generate_traffic(cfg_, traffic_rng)) add_flow(f);
  }

  /// Fixed static placement; add flows and hooks by hand. Used by tests
  /// and controlled topologies.
  Simulation(const ScenarioConfig& cfg, const std::vector<Vec2>& positions)
      : Simulation(cfg, nullptr) {
    world_.place_static(positions);
  }

  void add_flow(const CbrFlow& flow) {
    if (flow.source >= cfg_.node_count || flow.sink >= cfg_.node_count)
      throw UnknownNode("flow endpoint out of range");
    if (flow.source == flow.sink) throw ConfigError("flow source == sink");
    for (std::uint64_t k = 0;; ++k) {
      const SimTime t = flow.start_at + static_cast<double>(k) / flow.rate;
      if (t >= cfg_.duration) break;
      sim_.schedule(t, "cbr.originate", flow.source, [this, flow] {
        DataPacket d;
        d.uid = log_.new_uid();
        d.src = flow.source;
        d.dst = flow.sink;
        d.originated_at = sim_.now();
        d.payload_bytes = cfg_.payload_size;
        nodes_[flow.source]->originate(std::move(d));
      });
    }
  }

  /// Schedule an arbitrary action (tests: forced outages etc.).
  void at(SimTime t, std::function<void()> fn) {
    sim_.schedule(t, "scenario.hook", std::move(fn));
  }

  void record_event_trace(bool on) { sim_.set_trace_recording(on); }

  RunStats run() {
    RunStats stats;
    stats.trace = sim_.run_until(cfg_.duration);
    stats.metrics = log_.summary();
    for (const auto& n : nodes_) stats.still_buffered += n->pending_count();
    if (cfg_.protocol == ProtocolKind::Emp) {
      for (const auto& n : nodes_)
        stats.disjointness_violations +=
            static_cast<EmpNode*>(n.get())->disjointness_violations();
    }
    return stats;
  }

  const ScenarioConfig& config() const { return cfg_; }
  EventQueue& engine() { return sim_; }
  World& world() { return world_; }
  PacketLog& log() { return log_; }
  const PacketLog& log() const { return log_; }

  RoutingProtocol& node(NodeId n) { return *nodes_.at(n); }
  DsrNode& dsr(NodeId n) { return dynamic_cast<DsrNode&>(*nodes_.at(n)); }
  AodvNode& aodv(NodeId n) { return dynamic_cast<AodvNode&>(*nodes_.at(n)); }
  EmpNode& emp(NodeId n) { return dynamic_cast<EmpNode&>(*nodes_.at(n)); }

 private:
  static ScenarioConfig validated(ScenarioConfig cfg) {
    cfg.validate();
    return cfg;
  }

  Simulation(const ScenarioConfig& cfg, std::nullptr_t)
      : cfg_(validated(cfg)),
        world_(sim_, log_, cfg.node_count, cfg.field, cfg.radio, cfg.mobility,
               cfg.master_seed) {
    world_.set_delivery_handler(
        [this](NodeId recv, NodeId send, const Packet& p, double signal) {
          nodes_[recv]->on_receive(p, send, signal);
        });
    world_.set_outcome_handler(
        [this](NodeId sender, const Packet& p, NodeId recv, bool ok) {
          nodes_[sender]->on_unicast_outcome(p, recv, ok);
        });
    world_.set_frame_sent_handler([this](NodeId n) { nodes_[n]->on_frame_sent(); });
    nodes_.reserve(cfg_.node_count);
    for (NodeId n = 0; n < cfg_.node_count; ++n) {
      switch (cfg_.protocol) {
        case ProtocolKind::Dsr:
          nodes_.push_back(std::make_unique<DsrNode>(sim_, world_, log_, cfg_, tuning_, n));
          break;
        case ProtocolKind::Aodv:
          nodes_.push_back(std::make_unique<AodvNode>(sim_, world_, log_, cfg_, tuning_, n));
          break;
        case ProtocolKind::Emp:
          nodes_.push_back(std::make_unique<EmpNode>(sim_, world_, log_, cfg_, tuning_, n));
          break;
      }
    }
    for (auto& n : nodes_) n->start();
  }

  ScenarioConfig cfg_;
  ProtocolTuning tuning_;
  EventQueue sim_;
  PacketLog log_;
  World world_;
  std::vector<std::unique_ptr<RoutingProtocol>> nodes_;
};

/// Dump every EMP node's enquiry table, nodes and neighbors in ascending
/// order. One line per row, all Table-style columns spelled out.
inline std::string dump_sonnet_tables(Simulation& sim) {
  std::string out;
  if (sim.config().protocol != ProtocolKind::Emp) return out;
  for (NodeId n = 0; n < sim.config().node_count; ++n) {
    const auto& table = sim.emp(n).sonnet_table();
    std::vector<NodeId> keys;
    keys.reserve(table.size());
    for (const auto& [k, _] : table) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (NodeId k : keys) {
      const SonnetEntry& row = table.at(k);
      out += std::to_string(n);
      out += " ip=" + std::to_string(row.ip_address);
      out += " mac=" + std::to_string(row.mac_address);
      out += " em=" + std::to_string(row.em_counter);
      out += " ts=";
      append_double(out, row.time_stamp);
      out += " state=";
      out += neighbor_state_name(row.neighbor_state);
      out += " usage=";
      append_double(out, row.resource_usage_pct);
      out += " battery=";
      append_double(out, row.battery_power_left);
      out += " signal=";
      append_double(out, row.signal_strength);
      out += '\n';
    }
  }
  return out;
}

}  // namespace manetsim
