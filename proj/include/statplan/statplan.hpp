#pragma once

#include "statplan/decision_engine.hpp"
#include "statplan/error.hpp"
#include "statplan/event_model.hpp"
#include "statplan/interval_stats.hpp"
#include "statplan/knowledge_base.hpp"
#include "statplan/rail_sim.hpp"
#include "statplan/temporal.hpp"
