#include <catch2/catch_amalgamated.hpp>

#include "manetsim/scenario.hpp"
#include "oracles.hpp"

using namespace manetsim;

namespace {

std::vector<Vec2> chain4() {
  return {Vec2{0, 0}, Vec2{100, 0}, Vec2{200, 0}, Vec2{300, 0}};
}

ScenarioConfig chain_cfg() { return oracle::static_config(ProtocolKind::Aodv, 4, 110.0); }

std::uint64_t count_records(const PacketLog& log, PacketKind kind, LogEvent ev) {
  std::uint64_t n = 0;
  for (const auto& r : log.records())
    if (r.kind == kind && r.event == ev) ++n;
  return n;
}

}  // namespace

TEST_CASE("freshness rule: bigger sequence wins, ties go to fewer hops") {
  CHECK(aodv_freshness_better(6, 7, 5, 3));       // fresher sequence, longer path
  CHECK(aodv_freshness_better(5, 2, 5, 4));       // equal sequence, shorter path
  CHECK_FALSE(aodv_freshness_better(5, 4, 5, 4)); // an entry never beats itself
  CHECK_FALSE(aodv_freshness_better(4, 1, 5, 9)); // stale sequence loses
}

TEST_CASE("aodv: local delivery without any transmission") {
  Simulation sim(chain_cfg(), chain4());
  sim.at(1.0, [&] {
    DataPacket d;
    d.uid = sim.log().new_uid();
    d.src = 2;
    d.dst = 2;
    d.originated_at = 1.0;
    sim.node(2).originate(std::move(d));
  });
  sim.run();
  CHECK(sim.log().delivered() == 1);
  CHECK(sim.log().data_tx() == 0);
}

TEST_CASE("aodv: table miss bumps the own sequence and floods one request") {
  ScenarioConfig cfg = chain_cfg();
  cfg.duration = 0.5;
  Simulation sim(cfg, {Vec2{0, 0}, Vec2{100, 0}, Vec2{200, 0}, Vec2{900, 0}});
  CHECK(sim.aodv(0).own_seq() == 0);
  sim.add_flow(CbrFlow{0, 3, 10.0, 0.1});
  sim.run();
  CHECK(sim.aodv(0).own_seq() >= 1);
  std::uint64_t floods_from_0 = 0;
  for (const auto& r : sim.log().records())
    if (r.kind == PacketKind::Rreq && r.event == LogEvent::Tx && r.node == 0) ++floods_from_0;
  CHECK(floods_from_0 == 1);  // later packets ride the pending discovery
}

TEST_CASE("aodv: table hit forwards straight to the next hop") {
  Simulation sim(chain_cfg(), chain4());
  sim.aodv(0).install_route(3, 1, 3, 1);
  sim.aodv(1).install_route(3, 2, 2, 1);
  sim.aodv(2).install_route(3, 3, 1, 1);
  sim.add_flow(CbrFlow{0, 3, 4.0, 0.5});
  const RunStats stats = sim.run();
  CHECK(count_records(sim.log(), PacketKind::Rreq, LogEvent::Tx) == 0);
  CHECK(stats.metrics.pdf.has_value());
  CHECK(*stats.metrics.pdf == 1.0);
  // pre-warmed static routes: zero control traffic at all
  CHECK(*stats.metrics.nrl == 0.0);
}

TEST_CASE("aodv: duplicate (origin, broadcast id) copies are dropped silently") {
  Simulation sim(chain_cfg(), chain4());
  AodvRreq rreq;
  rreq.uid = 700;
  rreq.origin = 0;
  rreq.broadcast_id = 4;
  rreq.origin_seq = 2;
  rreq.dst = 3;
  rreq.hop_count = 0;
  sim.at(1.0, [&, rreq] { sim.node(1).on_receive(Packet{rreq}, 0, 0.5); });
  sim.at(1.5, [&, rreq] { sim.node(1).on_receive(Packet{rreq}, 0, 0.5); });
  sim.run();
  std::uint64_t rebroadcasts = 0;
  for (const auto& r : sim.log().records())
    if (r.kind == PacketKind::Rreq && r.event == LogEvent::Tx && r.node == 1) ++rebroadcasts;
  CHECK(rebroadcasts == 1);
}

TEST_CASE("aodv: flood installs reverse routes with per-hop counts") {
  Simulation sim(chain_cfg(), chain4());
  sim.add_flow(CbrFlow{0, 3, 2.0, 0.5});
  sim.run();
  // intermediate 2 heard the request from 1 with hop_count 1
  const auto rev = sim.aodv(2).route_entry(0);
  REQUIRE(rev.has_value());
  CHECK(rev->next_hop == 1);
  CHECK(rev->hops == 2);
  // destination's reply installed the forward route at the source
  const auto fwd = sim.aodv(0).route_entry(3);
  REQUIRE(fwd.has_value());
  CHECK(fwd->next_hop == 1);
  CHECK(fwd->hops == 3);
  const auto adj = oracle::unit_disk_graph(chain4(), 110.0);
  CHECK(fwd->hops == static_cast<std::uint32_t>(oracle::bfs_distance(adj, 0, 3)));
}

TEST_CASE("aodv: the greatest destination sequence wins either arrival order") {
  auto drive = [](bool low_first) {
    Simulation sim(chain_cfg(), chain4());
    AodvRrep lo;
    lo.uid = 800;
    lo.origin = 0;
    lo.dst = 3;
    lo.dst_seq = 4;
    lo.hop_count = 2;
    AodvRrep hi = lo;
    hi.uid = 801;
    hi.dst_seq = 7;
    hi.hop_count = 5;
    sim.at(1.0, [&sim, lo, hi, low_first] {
      sim.node(0).on_receive(Packet{low_first ? lo : hi}, 1, 0.5);
      sim.node(0).on_receive(Packet{low_first ? hi : lo}, 1, 0.5);
    });
    sim.run();
    const auto e = sim.aodv(0).route_entry(3);
    REQUIRE(e.has_value());
    return e->seq;
  };
  CHECK(drive(true) == 7);
  CHECK(drive(false) == 7);
}

TEST_CASE("aodv: first reply for an unknown destination always installs") {
  Simulation sim(chain_cfg(), chain4());
  AodvRrep rrep;
  rrep.uid = 802;
  rrep.origin = 0;
  rrep.dst = 3;
  rrep.dst_seq = 1;
  rrep.hop_count = 0;
  sim.at(1.0, [&, rrep] { sim.node(0).on_receive(Packet{rrep}, 1, 0.5); });
  sim.run();
  CHECK(sim.aodv(0).route_entry(3).has_value());
}

TEST_CASE("aodv: link break invalidates entries and propagates the error") {
  ScenarioConfig cfg = chain_cfg();
  cfg.duration = 15.0;
  Simulation sim(cfg, chain4());
  sim.add_flow(CbrFlow{0, 3, 4.0, 0.1});
  sim.at(10.0, [&] {
    sim.world().set_motion(2, MotionState{Vec2{225, 0}, Vec2{225, 0}, 0.0, 10.0});
  });
  const RunStats stats = sim.run();
  CHECK(count_records(sim.log(), PacketKind::Rerr, LogEvent::Tx) >= 2);  // node 1, then node 0
  const auto broken = sim.aodv(1).route_entry(3);
  REQUIRE(broken.has_value());
  CHECK_FALSE(broken->valid);
  const auto at_source = sim.aodv(0).route_entry(3);
  REQUIRE(at_source.has_value());
  CHECK_FALSE(at_source->valid);
  // the source re-issued a request with a fresh broadcast id after the error
  CHECK(count_records(sim.log(), PacketKind::Rreq, LogEvent::Tx) > 3);
  CHECK(sim.log().delivered() >= 38);
  CHECK(stats.still_buffered > 0);
  CHECK(oracle::conservation_violations(sim.log().records()).empty());
  CHECK(oracle::loop_violations(sim.log().records()).empty());
}

TEST_CASE("aodv: an error about someone else's route changes nothing") {
  Simulation sim(chain_cfg(), chain4());
  sim.aodv(0).install_route(3, 1, 3, 5);  // via node 1
  AodvRerr rerr;
  rerr.uid = 900;
  rerr.unreachable.emplace_back(3, 6);
  // reported by node 2, but node 0 routes through node 1
  sim.at(1.0, [&, rerr] { sim.node(0).on_receive(Packet{rerr}, 2, 0.5); });
  sim.run();
  const auto e = sim.aodv(0).route_entry(3);
  REQUIRE(e.has_value());
  CHECK(e->valid);
  CHECK(e->seq == 5);
  CHECK(count_records(sim.log(), PacketKind::Rerr, LogEvent::Tx) == 0);  // no re-propagation
}

TEST_CASE("aodv: installed hop counts equal BFS distances on random static nets") {
  std::mt19937_64 topo_rng(78);
  int checked = 0;
  while (checked < 5) {
    const auto pos = oracle::random_positions(topo_rng, 12, 800.0, 800.0);
    const auto adj = oracle::unit_disk_graph(pos, 300.0);
    if (!oracle::is_connected(adj)) continue;
    ++checked;
    ScenarioConfig cfg = oracle::static_config(ProtocolKind::Aodv, 12, 300.0);
    cfg.field = FieldSpec{800, 800};
    cfg.duration = 5.0;
    Simulation sim(cfg, pos);
    sim.add_flow(CbrFlow{0, 11, 2.0, 0.1});
    sim.run();
    const auto r0 = sim.aodv(0).route_entry(11);
    REQUIRE(r0.has_value());
    CHECK(r0->hops == static_cast<std::uint32_t>(oracle::bfs_distance(adj, 0, 11)));
  }
}
