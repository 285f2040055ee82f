#pragma once

#include "vapbench/accuracy.hpp"
#include "vapbench/benchmark.hpp"
#include "vapbench/config.hpp"
#include "vapbench/corpus.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/estimate.hpp"
#include "vapbench/evalmetrics.hpp"
#include "vapbench/features.hpp"
#include "vapbench/geometry.hpp"
#include "vapbench/params.hpp"
#include "vapbench/profile.hpp"
#include "vapbench/stats.hpp"
#include "vapbench/strategies.hpp"
#include "vapbench/synth.hpp"
#include "vapbench/trace.hpp"
#include "vapbench/trace_io.hpp"
#include "vapbench/vap.hpp"
