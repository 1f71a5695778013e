#pragma once

/// @file oracle.hpp
/// @brief Exact minimum-energy round plans over the cluster templates.

#include <cstddef>
#include <optional>

#include "flsim/round_model.hpp"

namespace flsim {

struct OracleResult {
    RoundPlan plan;
    PlanCost cost;
    ClusterTemplate cluster = ClusterTemplate::C1;
};

/// Minimum fleet energy over every feasible C1..C7 composition scaled to k,
/// every choice of devices within each tier, and (when `search_targets`)
/// every processor and DVFS step; otherwise participants run on the top CPU
/// step. Devices without data are never selected. Throws SimError when no
/// template is feasible.
///
/// For a fixed round deadline T each device's cheapest feasible action and
/// its marginal cost over idling are independent, so the search sweeps T over
/// all participant latencies and takes the cheapest devices per tier.
OracleResult oracle_plan(const RoundEnvironment& env, std::size_t k, bool search_targets);

}  // namespace flsim
