#pragma once

#include "simsr/textmetrics.hpp"
#include "simsr/features.hpp"
#include "simsr/encoder.hpp"
#include "simsr/pool.hpp"
#include "simsr/simulation.hpp"
#include "simsr/baselines.hpp"
#include "simsr/engine.hpp"
#include "simsr/evalharness.hpp"
