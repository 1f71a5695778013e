#pragma once

/// @file fleet.hpp
/// @brief Heterogeneous mobile fleet: tier profiles, DVFS tables and the
/// named participant cluster templates.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flsim {

enum class Tier : std::uint8_t { H = 0, M = 1, L = 2 };
inline constexpr std::array<Tier, 3> kTiers{Tier::H, Tier::M, Tier::L};

enum class Processor : std::uint8_t { CPU = 0, GPU = 1 };

/// Two-level radio signal classification.
enum class Signal : std::uint8_t { Regular = 0, Bad = 1 };

std::string_view to_string(Tier tier);
std::string_view to_string(Processor processor);
std::string_view to_string(Signal signal);
Tier parse_tier(std::string_view name);

using DeviceId = int;

struct FrequencyStep {
    double frequency_ghz = 0.0;
    double busy_power_w = 0.0;
};

/// Per-tier hardware description that a DeviceProfile is generated from.
struct TierSpec {
    double peak_gflops = 0.0;
    double ram_gb = 0.0;
    double cpu_max_ghz = 0.0;
    int cpu_step_count = 0;
    double cpu_max_power_w = 0.0;
    double gpu_max_ghz = 0.0;
    int gpu_step_count = 0;
    double gpu_max_power_w = 0.0;
    double cpu_idle_fraction = 0.05;
    double gpu_idle_fraction = 0.03;
    /// GPU throughput at its top step as a multiple of the CPU peak.
    double gpu_throughput_factor = 1.5;
    /// Lowest DVFS frequency as a fraction of the maximum.
    double min_frequency_fraction = 0.3;
    double tx_power_regular_w = 0.8;
    double tx_power_bad_w = 1.6;

    /// Mi8Pro / Galaxy S10e / Moto X Force class defaults.
    static TierSpec defaults(Tier tier);
};

struct DeviceProfile {
    DeviceId id = 0;
    Tier tier = Tier::L;
    double peak_gflops = 0.0;
    double ram_gb = 0.0;
    std::vector<FrequencyStep> cpu_steps;
    std::vector<FrequencyStep> gpu_steps;
    double cpu_idle_power_w = 0.0;
    double gpu_idle_power_w = 0.0;
    /// Indexed by Signal.
    std::array<double, 2> radio_tx_power_w{0.8, 1.6};
    double gpu_throughput_factor = 1.5;

    const std::vector<FrequencyStep>& steps(Processor p) const {
        return p == Processor::CPU ? cpu_steps : gpu_steps;
    }
    double idle_power(Processor p) const {
        return p == Processor::CPU ? cpu_idle_power_w : gpu_idle_power_w;
    }
    std::size_t max_step(Processor p) const { return steps(p).size() - 1; }

    /// Effective GFLOP/s at a DVFS step, before interference.
    double throughput_gflops(Processor p, std::size_t step) const;
    double tx_power(Signal s) const { return radio_tx_power_w[static_cast<std::size_t>(s)]; }
};

/// Build a device from its tier spec. Busy power follows
/// idle + (max - idle) * (f / f_max)^3 over linearly spaced frequencies.
DeviceProfile make_profile(DeviceId id, Tier tier, const TierSpec& spec);

/// Throws SimError when a profile breaks the DVFS table invariants.
void validate_profile(const DeviceProfile& profile);

struct TierCounts {
    int h = 0;
    int m = 0;
    int l = 0;

    int total() const { return h + m + l; }
    int& operator[](Tier t);
    int operator[](Tier t) const;
    bool operator==(const TierCounts&) const = default;
};

struct FleetSpec {
    TierCounts counts{3, 7, 10};
    std::array<TierSpec, 3> tiers{TierSpec::defaults(Tier::H), TierSpec::defaults(Tier::M),
                                  TierSpec::defaults(Tier::L)};

    static FleetSpec paper_scale() { return FleetSpec{TierCounts{30, 70, 100}}; }
    static FleetSpec desk_scale() { return FleetSpec{TierCounts{3, 7, 10}}; }
};

/// Devices are laid out H first, then M, then L, with ids 0..N-1.
class Fleet {
public:
    Fleet() = default;
    explicit Fleet(std::vector<DeviceProfile> devices);

    std::size_t size() const { return devices_.size(); }
    const std::vector<DeviceProfile>& devices() const { return devices_; }
    const DeviceProfile& device(DeviceId id) const;
    const TierCounts& counts() const { return counts_; }
    std::vector<DeviceId> ids_in_tier(Tier tier) const;

private:
    std::vector<DeviceProfile> devices_;
    TierCounts counts_;
};

/// Profiles are seed-independent today; the seed is reserved for per-device jitter.
Fleet build_fleet(const FleetSpec& spec, std::uint64_t seed);

enum class ClusterTemplate : std::uint8_t { C0 = 0, C1, C2, C3, C4, C5, C6, C7 };

std::string_view to_string(ClusterTemplate c);
ClusterTemplate parse_cluster(std::string_view name);

/// Reference composition at K = 20. C0 (random) returns all zeros.
TierCounts template_counts(ClusterTemplate c);

/// Largest-remainder scaling of a composition so it sums to k exactly.
/// Equal remainders favour the higher tier.
TierCounts scale_counts(const TierCounts& reference, int k);

/// Picks k distinct devices whose tier histogram matches the scaled template.
/// C0 draws k devices uniformly from the whole fleet.
std::vector<DeviceId> instantiate_cluster(const Fleet& fleet, ClusterTemplate c, int k,
                                          std::uint64_t seed);

}  // namespace flsim
