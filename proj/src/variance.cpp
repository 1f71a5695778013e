#include "flsim/variance.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "flsim/error.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::string_view to_string(InterferenceScenario s) {
    return s == InterferenceScenario::None ? "none" : "web-browsing";
}

InterferenceScenario parse_scenario(std::string_view name) {
    if (name == "none") return InterferenceScenario::None;
    if (name == "web-browsing") return InterferenceScenario::WebBrowsing;
    throw ConfigError("unknown interference scenario '" + std::string(name) + "'");
}

Signal classify_signal(double bandwidth_mbps) {
    return bandwidth_mbps <= kBadSignalThresholdMbps ? Signal::Bad : Signal::Regular;
}

InterferenceState sample_interference(InterferenceScenario scenario, double affected_fraction,
                                      std::uint64_t seed, std::uint64_t round, DeviceId device) {
    if (!(affected_fraction >= 0.0 && affected_fraction <= 1.0)) {
        throw SimError("affected_fraction must be in [0, 1]");
    }
    if (scenario == InterferenceScenario::None) return {};
    auto eng = keyed_engine(Stream::Interference, seed, round, static_cast<std::uint64_t>(device));
    if (!(unit_double(eng) < affected_fraction)) return {};
    InterferenceState s;
    s.co_cpu = 0.2 + 0.6 * unit_double(eng);
    s.co_mem = 0.1 + 0.5 * unit_double(eng);
    return s;
}

NetworkCondition sample_network(double mean_mbps, double stddev_mbps, std::uint64_t seed,
                                std::uint64_t round, DeviceId device) {
    if (!(mean_mbps > 0.0)) throw SimError("mean bandwidth must be positive");
    if (stddev_mbps < 0.0) throw SimError("bandwidth stddev must be non-negative");
    double bw = mean_mbps;
    if (stddev_mbps > 0.0) {
        auto eng = keyed_engine(Stream::Network, seed, round, static_cast<std::uint64_t>(device));
        std::normal_distribution<double> normal(mean_mbps, stddev_mbps);
        bw = normal(eng);
    }
    bw = std::max(1.0, bw);
    return {bw, classify_signal(bw)};
}

}  // namespace flsim
