#include "flsim/energy.hpp"

#include <algorithm>
#include <string>

#include "flsim/error.hpp"

namespace flsim {

double ExecutionRecord::t_busy() const {
    double sum = 0.0;
    for (const auto& [step, seconds] : busy_seconds) sum += seconds;
    return sum;
}

namespace {

double processor_energy(const DeviceProfile& profile, const ExecutionRecord& record,
                        Processor processor) {
    if (record.target.processor != processor) {
        throw SimError("execution record targets " +
                       std::string(to_string(record.target.processor)) + ", expected " +
                       std::string(to_string(processor)));
    }
    const auto& table = profile.steps(processor);
    double energy = 0.0;
    for (const auto& [step, seconds] : record.busy_seconds) {
        if (step >= table.size()) {
            throw SimError("unknown frequency step " + std::to_string(step) + " on device " +
                           std::to_string(profile.id));
        }
        if (seconds < 0.0) throw SimError("negative busy time");
        energy += table[step].busy_power_w * seconds;
    }
    if (record.t_idle < 0.0) throw SimError("negative idle time");
    return energy + profile.idle_power(processor) * record.t_idle;
}

}  // namespace

double compute_energy_cpu(const DeviceProfile& profile, const ExecutionRecord& record) {
    return processor_energy(profile, record, Processor::CPU);
}

double compute_energy_gpu(const DeviceProfile& profile, const ExecutionRecord& record) {
    return processor_energy(profile, record, Processor::GPU);
}

double compute_energy_comm(const DeviceProfile& profile, const ExecutionRecord& record) {
    if (record.t_tx < 0.0) throw SimError("negative transmit time");
    const auto level = static_cast<std::size_t>(record.signal);
    if (level >= profile.radio_tx_power_w.size()) throw SimError("unknown signal level");
    return profile.radio_tx_power_w[level] * record.t_tx;
}

double compute_energy_idle(const DeviceProfile& profile, double t_round) {
    return profile.cpu_idle_power_w * t_round;
}

double compute_energy(const DeviceProfile& profile, const ExecutionRecord& record) {
    return record.target.processor == Processor::CPU ? compute_energy_cpu(profile, record)
                                                     : compute_energy_gpu(profile, record);
}

double slowdown(const InterferenceState& interference, Processor processor) {
    double s = interference.co_cpu;
    if (interference.co_mem > 0.75) s += 0.1;
    s = std::min(s, 0.9);
    return processor == Processor::GPU ? 0.25 * s : s;
}

double compute_time(const WorkloadSpec& workload, const DeviceProfile& profile,
                    ExecutionTarget target, const InterferenceState& interference,
                    const GlobalParams& params, std::size_t samples) {
    if (samples == 0) throw SimError("compute_time needs at least one sample");
    const double throughput = profile.throughput_gflops(target.processor, target.step) * 1e9 *
                              (1.0 - slowdown(interference, target.processor));
    if (!(throughput > 0.0)) throw SimError("zero effective throughput");
    const double flops = workload.flops_per_sample * static_cast<double>(samples) *
                         static_cast<double>(params.local_epochs);
    return flops / throughput;
}

double transfer_time(std::size_t payload_bytes, double bandwidth_mbps) {
    if (!(bandwidth_mbps > 0.0)) throw SimError("bandwidth must be positive");
    return static_cast<double>(payload_bytes) * 8.0 / (bandwidth_mbps * 1e6) +
           kTransferSetupSeconds;
}

double ppw(double progress, double total_energy_j) {
    if (!(total_energy_j > 0.0)) throw SimError("PPW needs positive energy");
    return progress / total_energy_j;
}

}  // namespace flsim
