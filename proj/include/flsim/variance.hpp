#pragma once

/// @file variance.hpp
/// @brief Per-device runtime variance: co-running app interference and
/// Gaussian network bandwidth, sampled from counter-keyed streams.

#include <cstdint>
#include <string_view>

#include "flsim/fleet.hpp"

namespace flsim {

struct InterferenceState {
    double co_cpu = 0.0;  ///< co-running CPU utilization, [0, 1]
    double co_mem = 0.0;  ///< co-running memory usage, [0, 1]

    bool operator==(const InterferenceState&) const = default;
};

struct NetworkCondition {
    double bandwidth_mbps = 100.0;
    Signal signal = Signal::Regular;

    bool operator==(const NetworkCondition&) const = default;
};

/// Links at or below this bandwidth are classified as a bad signal.
inline constexpr double kBadSignalThresholdMbps = 40.0;

enum class InterferenceScenario { None, WebBrowsing };

std::string_view to_string(InterferenceScenario s);
InterferenceScenario parse_scenario(std::string_view name);

Signal classify_signal(double bandwidth_mbps);

/// Web-browsing envelope: co_cpu ~ U[0.2, 0.8], co_mem ~ U[0.1, 0.6] on
/// affected devices. A device is affected in a round with probability
/// `affected_fraction`. Pure function of (seed, round, device).
InterferenceState sample_interference(InterferenceScenario scenario, double affected_fraction,
                                      std::uint64_t seed, std::uint64_t round, DeviceId device);

/// bandwidth = max(1, N(mean, stddev)). Pure function of (seed, round, device).
NetworkCondition sample_network(double mean_mbps, double stddev_mbps, std::uint64_t seed,
                                std::uint64_t round, DeviceId device);

struct VarianceConfig {
    InterferenceScenario scenario = InterferenceScenario::None;
    double affected_fraction = 0.3;
    double bandwidth_mean_mbps = 60.0;
    double bandwidth_stddev_mbps = 20.0;
};

}  // namespace flsim
