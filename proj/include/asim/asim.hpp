#pragma once

// Umbrella header.
#include "asim/config.hpp"
#include "asim/decision.hpp"
#include "asim/error.hpp"
#include "asim/feeding.hpp"
#include "asim/fsm.hpp"
#include "asim/harness.hpp"
#include "asim/kv.hpp"
#include "asim/log.hpp"
#include "asim/rng.hpp"
#include "asim/scenario.hpp"
#include "asim/union_find.hpp"
#include "asim/vitality.hpp"
#include "asim/world.hpp"
