#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string_view>
#include <utility>
#include <vector>

#include "manetsim/types.hpp"

namespace manetsim {

/// One executed event, as recorded in the trace.
struct EventRecord {
  std::uint64_t id = 0;
  SimTime at = 0.0;
  NodeId target = kNoNode;  // kNoNode = world-level event
  const char* tag = "";

  friend bool operator==(const EventRecord& a, const EventRecord& b) {
    return a.id == b.id && a.at == b.at && a.target == b.target &&
           std::string_view(a.tag) == std::string_view(b.tag);
  }
};

using EventTrace = std::vector<EventRecord>;

/// Single-clock discrete-event engine. Events execute in (fire_at, id)
/// order; ids are handed out in scheduling order, which pins the order of
/// simultaneous events and makes whole runs replayable.
class EventQueue {
 public:
  SimTime now() const { return now_; }

  /// Record executed events into the trace returned by run_until().
  /// Off by default; long runs do not need the memory.
  void set_trace_recording(bool on) { record_trace_ = on; }

  std::uint64_t schedule(SimTime at, const char* tag, NodeId target,
                         std::function<void()> action) {
    if (at < now_) throw SchedulingInPast("schedule: fire time precedes clock");
    const std::uint64_t id = next_id_++;
    queue_.push(Entry{at, id, target, tag, std::move(action)});
    return id;
  }

  std::uint64_t schedule(SimTime at, const char* tag, std::function<void()> action) {
    return schedule(at, tag, kNoNode, std::move(action));
  }

  /// Execute every event with fire_at <= t_end, then advance the clock to
  /// t_end. Returns the executed-event trace (empty unless recording).
  EventTrace run_until(SimTime t_end) {
    if (t_end < now_) throw SchedulingInPast("run_until: t_end precedes clock");
    EventTrace trace;
    while (!queue_.empty() && queue_.top().at <= t_end) {
      // top() is const; moving the action out requires the pop-copy dance.
      Entry ev = std::move(const_cast<Entry&>(queue_.top()));
      queue_.pop();
      now_ = ev.at;
      if (record_trace_) trace.push_back(EventRecord{ev.id, ev.at, ev.target, ev.tag});
      ev.action();
    }
    now_ = t_end;
    return trace;
  }

  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t id;
    NodeId target;
    const char* tag;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.id > b.id;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  SimTime now_ = 0.0;
  std::uint64_t next_id_ = 0;
  bool record_trace_ = false;
};

}  // namespace manetsim
