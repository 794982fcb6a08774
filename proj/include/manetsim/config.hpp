#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "manetsim/textio.hpp"
#include "manetsim/types.hpp"

namespace manetsim {

enum class ProtocolKind : std::uint8_t { Dsr, Aodv, Emp };

inline const char* protocol_name(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::Dsr: return "dsr";
    case ProtocolKind::Aodv: return "aodv";
    case ProtocolKind::Emp: return "emp";
  }
  return "?";
}

inline ProtocolKind parse_protocol(std::string_view s) {
  std::string lower(s);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "dsr") return ProtocolKind::Dsr;
  if (lower == "aodv") return ProtocolKind::Aodv;
  if (lower == "emp") return ProtocolKind::Emp;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected dsr, aodv or emp)");
}

struct FieldSpec {
  double width = 1500.0;
  double height = 300.0;
};

struct RadioParams {
  double range = 250.0;      // meters, unit disk, boundary inclusive
  double hop_delay = 0.002;  // seconds per hop
  double loss_prob = 0.0;    // i.i.d. per frame copy
  int max_retries = 3;       // unicast retransmissions after the first try
  double retry_gap = 0.05;   // seconds between unicast attempts
};

struct MobilityParams {
  double v_min = 1.0;   // m/s
  double v_max = 20.0;  // m/s
  double pause = 0.0;   // seconds at each waypoint
};

struct EmpParams {
  double t_enq = 1.0;  // enquiry beacon period, seconds
  double w_signal = 1.0 / 3.0;
  double w_battery = 1.0 / 3.0;
  double w_bandwidth = 1.0 / 3.0;
  int k = 3;             // signal samples needed for a stability verdict
  double theta = 0.3;    // per-sample stability threshold
  double epsilon = 0.05; // score band that round-robins between next hops
};

struct ScenarioConfig {
  std::uint32_t node_count = 50;
  FieldSpec field;
  ProtocolKind protocol = ProtocolKind::Aodv;
  std::uint32_t source_count = 10;
  double cbr_rate = 4.0;       // packets per second per flow
  std::uint32_t payload_size = 512;  // bytes, logged only
  double duration = 100.0;     // seconds of virtual time
  std::uint64_t master_seed = 1;
  RadioParams radio;
  MobilityParams mobility;
  EmpParams emp;

  void validate() const {
    if (node_count == 0) throw ConfigError("node_count must be positive");
    if (field.width <= 0 || field.height <= 0)
      throw ConfigError("field dimensions must be positive");
    if (source_count == 0 || source_count > node_count)
      throw TooManySources("source_count must be in [1, node_count]");
    if (cbr_rate <= 0) throw ConfigError("cbr_rate must be positive");
    if (duration < 0) throw ConfigError("duration must be non-negative");
    if (radio.range <= 0) throw ConfigError("radio.range must be positive");
    if (radio.hop_delay <= 0) throw ConfigError("radio.hop_delay must be positive");
    if (radio.loss_prob < 0 || radio.loss_prob > 1)
      throw ConfigError("radio.loss_prob must be in [0, 1]");
    if (radio.max_retries < 0) throw ConfigError("radio.max_retries must be >= 0");
    if (radio.retry_gap <= 0) throw ConfigError("radio.retry_gap must be positive");
    if (mobility.v_min < 0 || mobility.v_max < mobility.v_min)
      throw ConfigError("mobility speeds must satisfy 0 <= v_min <= v_max");
    if (mobility.pause < 0) throw ConfigError("mobility.pause must be >= 0");
    if (emp.t_enq <= 0) throw ConfigError("emp.t_enq must be positive");
    if (emp.w_signal < 0 || emp.w_battery < 0 || emp.w_bandwidth < 0 ||
        emp.w_signal + emp.w_battery + emp.w_bandwidth <= 0)
      throw ConfigError("emp weights must be non-negative with positive sum");
    if (emp.k <= 0) throw ConfigError("emp.k must be positive");
    if (emp.theta < 0 || emp.theta > 1) throw ConfigError("emp.theta must be in [0, 1]");
    if (emp.epsilon < 0) throw ConfigError("emp.epsilon must be >= 0");
  }
};

namespace detail {

inline void apply_config_key(ScenarioConfig& c, std::string_view key, std::string_view value) {
  auto num = [&] { return parse_double(value); };
  auto integer = [&] { return parse_u64(value); };
  if (key == "node_count") c.node_count = static_cast<std::uint32_t>(integer());
  else if (key == "field.width") c.field.width = num();
  else if (key == "field.height") c.field.height = num();
  else if (key == "protocol") c.protocol = parse_protocol(value);
  else if (key == "source_count") c.source_count = static_cast<std::uint32_t>(integer());
  else if (key == "cbr_rate") c.cbr_rate = num();
  else if (key == "payload_size") c.payload_size = static_cast<std::uint32_t>(integer());
  else if (key == "duration") c.duration = num();
  else if (key == "master_seed") c.master_seed = integer();
  else if (key == "radio.range") c.radio.range = num();
  else if (key == "radio.hop_delay") c.radio.hop_delay = num();
  else if (key == "radio.loss_prob") c.radio.loss_prob = num();
  else if (key == "radio.max_retries") c.radio.max_retries = static_cast<int>(integer());
  else if (key == "radio.retry_gap") c.radio.retry_gap = num();
  else if (key == "mobility.v_min") c.mobility.v_min = num();
  else if (key == "mobility.v_max") c.mobility.v_max = num();
  else if (key == "mobility.pause") c.mobility.pause = num();
  else if (key == "emp.t_enq") c.emp.t_enq = num();
  else if (key == "emp.w_signal") c.emp.w_signal = num();
  else if (key == "emp.w_battery") c.emp.w_battery = num();
  else if (key == "emp.w_bandwidth") c.emp.w_bandwidth = num();
  else if (key == "emp.k") c.emp.k = static_cast<int>(integer());
  else if (key == "emp.theta") c.emp.theta = num();
  else if (key == "emp.epsilon") c.emp.epsilon = num();
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace detail

/// Flat `key = value` text, `#` starts a comment, nested keys dotted.
inline ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig c;
  int line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    try {
      detail::apply_config_key(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace manetsim
