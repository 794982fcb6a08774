#pragma once

// Umbrella header for the whole library.

#include "manetsim/aodv.hpp"
#include "manetsim/config.hpp"
#include "manetsim/dsr.hpp"
#include "manetsim/emp.hpp"
#include "manetsim/log.hpp"
#include "manetsim/packets.hpp"
#include "manetsim/results.hpp"
#include "manetsim/rng.hpp"
#include "manetsim/routing.hpp"
#include "manetsim/scenario.hpp"
#include "manetsim/sim.hpp"
#include "manetsim/textio.hpp"
#include "manetsim/types.hpp"
#include "manetsim/world.hpp"
