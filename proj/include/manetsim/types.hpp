#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace manetsim {

/// Virtual time in seconds.
using SimTime = double;

/// Dense node index, 0-based. Doubles as both network and link identity.
using NodeId = std::uint32_t;

inline constexpr NodeId kNoNode = 0xffffffffu;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Base class for all simulator errors.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchedulingInPast : SimError {
  using SimError::SimError;
};

struct InvalidRange : SimError {
  using SimError::SimError;
};

struct UnknownNode : SimError {
  using SimError::SimError;
};

/// Scenario/config validation failure (CLI exit code 2).
struct ConfigError : SimError {
  using SimError::SimError;
};

struct TooManySources : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace manetsim
