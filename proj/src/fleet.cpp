#include "flsim/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flsim/error.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::H: return "H";
        case Tier::M: return "M";
        case Tier::L: return "L";
    }
    return "?";
}

std::string_view to_string(Processor processor) {
    return processor == Processor::CPU ? "CPU" : "GPU";
}

std::string_view to_string(Signal signal) { return signal == Signal::Regular ? "regular" : "bad"; }

Tier parse_tier(std::string_view name) {
    if (name == "H") return Tier::H;
    if (name == "M") return Tier::M;
    if (name == "L") return Tier::L;
    throw ConfigError("unknown tier '" + std::string(name) + "'");
}

TierSpec TierSpec::defaults(Tier tier) {
    TierSpec s;
    switch (tier) {
        case Tier::H:
            s.peak_gflops = 153.6;
            s.ram_gb = 8;
            s.cpu_max_ghz = 2.8;
            s.cpu_step_count = 23;
            s.cpu_max_power_w = 5.5;
            s.gpu_max_ghz = 0.7;
            s.gpu_step_count = 7;
            s.gpu_max_power_w = 2.8;
            break;
        case Tier::M:
            s.peak_gflops = 80;
            s.ram_gb = 4;
            s.cpu_max_ghz = 2.7;
            s.cpu_step_count = 21;
            s.cpu_max_power_w = 5.6;
            s.gpu_max_ghz = 0.7;
            s.gpu_step_count = 9;
            s.gpu_max_power_w = 2.4;
            break;
        case Tier::L:
            s.peak_gflops = 52.8;
            s.ram_gb = 2;
            s.cpu_max_ghz = 1.9;
            s.cpu_step_count = 15;
            s.cpu_max_power_w = 3.6;
            s.gpu_max_ghz = 0.6;
            s.gpu_step_count = 6;
            s.gpu_max_power_w = 2.0;
            break;
    }
    return s;
}

double DeviceProfile::throughput_gflops(Processor p, std::size_t step) const {
    const auto& table = steps(p);
    if (step >= table.size()) {
        throw SimError("frequency step " + std::to_string(step) + " out of range for device " +
                       std::to_string(id));
    }
    const double scale = table[step].frequency_ghz / table.back().frequency_ghz;
    const double top = p == Processor::CPU ? peak_gflops : peak_gflops * gpu_throughput_factor;
    return top * scale;
}

namespace {

std::vector<FrequencyStep> dvfs_table(double f_max, int count, double p_max, double p_idle,
                                      double min_fraction) {
    std::vector<FrequencyStep> steps;
    steps.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double frac =
            count == 1 ? 1.0 : min_fraction + (1.0 - min_fraction) * i / double(count - 1);
        const double f = f_max * frac;
        steps.push_back({f, p_idle + (p_max - p_idle) * frac * frac * frac});
    }
    return steps;
}

}  // namespace

DeviceProfile make_profile(DeviceId id, Tier tier, const TierSpec& spec) {
    if (spec.cpu_step_count < 1 || spec.gpu_step_count < 1) {
        throw ConfigError("tier " + std::string(to_string(tier)) + " needs at least one DVFS step");
    }
    if (!(spec.min_frequency_fraction > 0.0 && spec.min_frequency_fraction <= 1.0)) {
        throw ConfigError("min_frequency_fraction must be in (0, 1]");
    }
    DeviceProfile d;
    d.id = id;
    d.tier = tier;
    d.peak_gflops = spec.peak_gflops;
    d.ram_gb = spec.ram_gb;
    d.cpu_idle_power_w = spec.cpu_idle_fraction * spec.cpu_max_power_w;
    d.gpu_idle_power_w = spec.gpu_idle_fraction * spec.gpu_max_power_w;
    d.cpu_steps = dvfs_table(spec.cpu_max_ghz, spec.cpu_step_count, spec.cpu_max_power_w,
                             d.cpu_idle_power_w, spec.min_frequency_fraction);
    d.gpu_steps = dvfs_table(spec.gpu_max_ghz, spec.gpu_step_count, spec.gpu_max_power_w,
                             d.gpu_idle_power_w, spec.min_frequency_fraction);
    d.radio_tx_power_w = {spec.tx_power_regular_w, spec.tx_power_bad_w};
    d.gpu_throughput_factor = spec.gpu_throughput_factor;
    validate_profile(d);
    return d;
}

void validate_profile(const DeviceProfile& d) {
    const auto fail = [&](const std::string& what) {
        throw SimError("device " + std::to_string(d.id) + ": " + what);
    };
    if (!(d.peak_gflops > 0.0)) fail("peak throughput must be positive");
    if (!(d.gpu_throughput_factor > 0.0)) fail("gpu throughput factor must be positive");
    for (Processor p : {Processor::CPU, Processor::GPU}) {
        const auto& table = d.steps(p);
        if (table.empty()) fail("empty DVFS table");
        const double idle = d.idle_power(p);
        if (idle < 0.0) fail("negative idle power");
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (!(table[i].frequency_ghz > 0.0) || !(table[i].busy_power_w > 0.0)) {
                fail("non-positive frequency or busy power");
            }
            if (!(idle < table[i].busy_power_w)) fail("idle power must be below busy power");
            if (i > 0 && !(table[i].frequency_ghz > table[i - 1].frequency_ghz)) {
                fail("frequencies must be strictly increasing");
            }
            if (i > 0 && table[i].busy_power_w < table[i - 1].busy_power_w) {
                fail("busy power must be non-decreasing");
            }
        }
    }
    for (double w : d.radio_tx_power_w) {
        if (!(w >= 0.0)) fail("negative radio power");
    }
}

int& TierCounts::operator[](Tier t) {
    switch (t) {
        case Tier::H: return h;
        case Tier::M: return m;
        case Tier::L: break;
    }
    return l;
}

int TierCounts::operator[](Tier t) const { return const_cast<TierCounts&>(*this)[t]; }

Fleet::Fleet(std::vector<DeviceProfile> devices) : devices_(std::move(devices)) {
    for (std::size_t i = 0; i < devices_.size(); ++i) {
        if (devices_[i].id != static_cast<DeviceId>(i)) {
            throw SimError("fleet device ids must be dense and ordered");
        }
        counts_[devices_[i].tier] += 1;
    }
}

const DeviceProfile& Fleet::device(DeviceId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= devices_.size()) {
        throw SimError("unknown device id " + std::to_string(id));
    }
    return devices_[static_cast<std::size_t>(id)];
}

std::vector<DeviceId> Fleet::ids_in_tier(Tier tier) const {
    std::vector<DeviceId> out;
    for (const auto& d : devices_) {
        if (d.tier == tier) out.push_back(d.id);
    }
    return out;
}

Fleet build_fleet(const FleetSpec& spec, std::uint64_t /*seed*/) {
    if (spec.counts.h < 0 || spec.counts.m < 0 || spec.counts.l < 0) {
        throw ConfigError("fleet counts must be non-negative");
    }
    if (spec.counts.total() == 0) throw ConfigError("fleet must contain at least one device");
    std::vector<DeviceProfile> devices;
    devices.reserve(static_cast<std::size_t>(spec.counts.total()));
    for (Tier tier : kTiers) {
        const auto& ts = spec.tiers[static_cast<std::size_t>(tier)];
        for (int i = 0; i < spec.counts[tier]; ++i) {
            devices.push_back(make_profile(static_cast<DeviceId>(devices.size()), tier, ts));
        }
    }
    return Fleet(std::move(devices));
}

std::string_view to_string(ClusterTemplate c) {
    static constexpr std::array<std::string_view, 8> names{"C0", "C1", "C2", "C3",
                                                           "C4", "C5", "C6", "C7"};
    return names[static_cast<std::size_t>(c)];
}

ClusterTemplate parse_cluster(std::string_view name) {
    for (int i = 0; i < 8; ++i) {
        auto c = static_cast<ClusterTemplate>(i);
        if (to_string(c) == name) return c;
    }
    throw ConfigError("unknown cluster template '" + std::string(name) + "'");
}

TierCounts template_counts(ClusterTemplate c) {
    switch (c) {
        case ClusterTemplate::C0: return {0, 0, 0};
        case ClusterTemplate::C1: return {20, 0, 0};
        case ClusterTemplate::C2: return {15, 5, 0};
        case ClusterTemplate::C3: return {10, 5, 5};
        case ClusterTemplate::C4: return {5, 10, 5};
        case ClusterTemplate::C5: return {5, 5, 10};
        case ClusterTemplate::C6: return {0, 5, 15};
        case ClusterTemplate::C7: return {0, 0, 20};
    }
    return {};
}

TierCounts scale_counts(const TierCounts& reference, int k) {
    if (k < 0) throw SimError("cluster size must be non-negative");
    const int total = reference.total();
    if (total <= 0) throw SimError("cannot scale an empty composition");
    TierCounts out;
    std::array<long long, 3> remainder{};
    int assigned = 0;
    for (Tier t : kTiers) {
        const long long num = static_cast<long long>(reference[t]) * k;
        out[t] = static_cast<int>(num / total);
        remainder[static_cast<std::size_t>(t)] = num % total;
        assigned += out[t];
    }
    std::array<Tier, 3> order = kTiers;
    std::stable_sort(order.begin(), order.end(), [&](Tier a, Tier b) {
        return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
    });
    for (int i = 0; assigned < k; ++i, ++assigned) out[order[static_cast<std::size_t>(i % 3)]] += 1;
    return out;
}

namespace {

void partial_shuffle_take(std::vector<DeviceId>& pool, int n, std::mt19937_64& eng,
                          std::vector<DeviceId>& out) {
    for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                        pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[pick(eng)]);
        out.push_back(pool[static_cast<std::size_t>(i)]);
    }
}

}  // namespace

std::vector<DeviceId> instantiate_cluster(const Fleet& fleet, ClusterTemplate c, int k,
                                          std::uint64_t seed) {
    if (k < 0 || static_cast<std::size_t>(k) > fleet.size()) {
        throw SimError("cluster size " + std::to_string(k) + " exceeds fleet size " +
                       std::to_string(fleet.size()));
    }
    auto eng = keyed_engine(Stream::Cluster, seed, static_cast<std::uint64_t>(c));
    std::vector<DeviceId> out;
    out.reserve(static_cast<std::size_t>(k));
    if (c == ClusterTemplate::C0) {
        std::vector<DeviceId> pool(fleet.size());
        std::iota(pool.begin(), pool.end(), 0);
        partial_shuffle_take(pool, k, eng, out);
    } else {
        const TierCounts want = scale_counts(template_counts(c), k);
        for (Tier t : kTiers) {
            auto pool = fleet.ids_in_tier(t);
            if (static_cast<int>(pool.size()) < want[t]) {
                throw SimError("cluster " + std::string(to_string(c)) + " needs " +
                               std::to_string(want[t]) + " tier " + std::string(to_string(t)) +
                               " devices but the fleet has " + std::to_string(pool.size()));
            }
            partial_shuffle_take(pool, want[t], eng, out);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace flsim
