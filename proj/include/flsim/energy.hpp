#pragma once

/// @file energy.hpp
/// @brief Utilization-based CPU/GPU energy, signal-strength radio energy,
/// idle energy, the compute-time model and performance-per-watt.

#include <cstddef>
#include <map>

#include "flsim/fleet.hpp"
#include "flsim/variance.hpp"
#include "flsim/workload.hpp"

namespace flsim {

/// On-device execution target: processor plus DVFS step index.
struct ExecutionTarget {
    Processor processor = Processor::CPU;
    std::size_t step = 0;

    bool operator==(const ExecutionTarget&) const = default;
    auto operator<=>(const ExecutionTarget&) const = default;
};

struct ExecutionRecord {
    DeviceId device = 0;
    ExecutionTarget target;
    /// Busy seconds keyed by step index of the target's DVFS table.
    std::map<std::size_t, double> busy_seconds;
    double t_idle = 0.0;
    double t_tx = 0.0;
    Signal signal = Signal::Regular;
    double t_round = 0.0;

    double t_busy() const;
};

struct EnergyBreakdown {
    double compute = 0.0;
    double comm = 0.0;
    double idle = 0.0;

    double total() const { return compute + comm + idle; }
};

/// sum_f P_busy(f) * t_busy(f) + P_idle * t_idle over the CPU table.
double compute_energy_cpu(const DeviceProfile& profile, const ExecutionRecord& record);
/// Same model over the GPU table.
double compute_energy_gpu(const DeviceProfile& profile, const ExecutionRecord& record);
/// P_TX(S) * t_TX.
double compute_energy_comm(const DeviceProfile& profile, const ExecutionRecord& record);
/// P_idle(CPU) * t_round, for devices that sat the round out.
double compute_energy_idle(const DeviceProfile& profile, double t_round);

/// Dispatches on the record's target.
double compute_energy(const DeviceProfile& profile, const ExecutionRecord& record);

/// Fractional throughput loss from co-running apps. CPU: co_cpu (+0.1 when
/// co_mem > 0.75), capped at 0.9. GPU targets see a quarter of that.
double slowdown(const InterferenceState& interference, Processor processor);

/// Seconds to run E local epochs over `samples` on the given target.
double compute_time(const WorkloadSpec& workload, const DeviceProfile& profile,
                    ExecutionTarget target, const InterferenceState& interference,
                    const GlobalParams& params, std::size_t samples);

/// One-way model transfer: payload / bandwidth + fixed setup latency.
inline constexpr double kTransferSetupSeconds = 0.05;
double transfer_time(std::size_t payload_bytes, double bandwidth_mbps);

/// progress / energy.
double ppw(double progress, double total_energy_j);

/// PPW of a run that needed `energy_to_target_j` to converge, i.e.
/// 1 / (convergence time * average power).
inline double convergence_ppw(double energy_to_target_j) { return ppw(1.0, energy_to_target_j); }

}  // namespace flsim
