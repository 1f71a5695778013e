#include "flsim/round_model.hpp"

#include <algorithm>
#include <string>

#include "flsim/error.hpp"

namespace flsim {

std::vector<DeviceId> RoundPlan::selected() const {
    std::vector<DeviceId> out;
    out.reserve(actions.size());
    for (const auto& [id, action] : actions) out.push_back(id);
    return out;
}

std::vector<Action> actions_for(const DeviceProfile& profile) {
    std::vector<Action> out;
    out.reserve(profile.cpu_steps.size() + profile.gpu_steps.size());
    for (Processor p : {Processor::CPU, Processor::GPU}) {
        for (std::size_t s = 0; s < profile.steps(p).size(); ++s) out.push_back({p, s});
    }
    return out;
}

Action default_action(const DeviceProfile& profile) {
    return {Processor::CPU, profile.max_step(Processor::CPU)};
}

RoundEnvironment::RoundEnvironment(const Fleet& fleet, const WorkloadSpec& workload,
                                   const GlobalParams& params,
                                   std::vector<DeviceConditions> conditions)
    : fleet_(&fleet), workload_(&workload), params_(&params), conditions_(std::move(conditions)) {
    if (conditions_.size() != fleet.size()) {
        throw SimError("round environment needs conditions for every device");
    }
}

const DeviceConditions& RoundEnvironment::conditions(DeviceId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= conditions_.size()) {
        throw SimError("unknown device id " + std::to_string(id));
    }
    return conditions_[static_cast<std::size_t>(id)];
}

double RoundEnvironment::compute_seconds(DeviceId id, Action action) const {
    const auto& c = conditions(id);
    if (c.samples == 0) return 0.0;
    return compute_time(*workload_, fleet_->device(id), action, c.interference, *params_,
                        c.samples);
}

double RoundEnvironment::transfer_seconds(DeviceId id) const {
    return transfer_time(workload_->payload_bytes(), conditions(id).network.bandwidth_mbps);
}

double RoundEnvironment::latency(DeviceId id, Action action) const {
    return 2.0 * transfer_seconds(id) + compute_seconds(id, action);
}

ExecutionRecord RoundEnvironment::participant_record(DeviceId id, Action action,
                                                     double t_round) const {
    ExecutionRecord r;
    r.device = id;
    r.target = action;
    const double busy = compute_seconds(id, action);
    r.busy_seconds[action.step] = busy;
    r.t_tx = 2.0 * transfer_seconds(id);
    r.signal = conditions(id).network.signal;
    r.t_round = t_round;
    r.t_idle = std::max(0.0, t_round - busy - r.t_tx);
    return r;
}

ExecutionRecord RoundEnvironment::straggler_record(DeviceId id, Action action,
                                                   double t_round) const {
    ExecutionRecord r;
    r.device = id;
    r.target = action;
    r.signal = conditions(id).network.signal;
    r.t_round = t_round;
    r.t_tx = std::min(transfer_seconds(id), t_round);
    r.busy_seconds[action.step] =
        std::min(compute_seconds(id, action), std::max(0.0, t_round - r.t_tx));
    r.t_idle = 0.0;
    return r;
}

ExecutionRecord RoundEnvironment::idle_record(DeviceId id, double t_round) const {
    ExecutionRecord r;
    r.device = id;
    r.target = default_action(fleet_->device(id));
    r.signal = conditions(id).network.signal;
    r.t_round = t_round;
    r.t_idle = t_round;
    return r;
}

double RoundEnvironment::participant_energy(DeviceId id, Action action, double t_round) const {
    const auto& d = fleet_->device(id);
    const double busy = compute_seconds(id, action);
    const double tx = 2.0 * transfer_seconds(id);
    const double wait = std::max(0.0, t_round - busy - tx);
    return d.steps(action.processor)[action.step].busy_power_w * busy +
           d.idle_power(action.processor) * wait + d.tx_power(conditions(id).network.signal) * tx;
}

double RoundEnvironment::idle_energy(DeviceId id, double t_round) const {
    return compute_energy_idle(fleet_->device(id), t_round);
}

EnergyBreakdown breakdown(const DeviceProfile& profile, const ExecutionRecord& record,
                          bool participant) {
    EnergyBreakdown b;
    if (participant) {
        b.compute = compute_energy(profile, record);
        b.comm = compute_energy_comm(profile, record);
    } else {
        b.idle = compute_energy_idle(profile, record.t_round);
    }
    return b;
}

PlanCost evaluate_plan(const RoundEnvironment& env, const RoundPlan& plan) {
    PlanCost cost;
    for (const auto& [id, action] : plan.actions) {
        cost.t_round = std::max(cost.t_round, env.latency(id, action));
    }
    for (const auto& d : env.fleet().devices()) {
        auto it = plan.actions.find(d.id);
        cost.energy += it == plan.actions.end()
                           ? env.idle_energy(d.id, cost.t_round)
                           : env.participant_energy(d.id, it->second, cost.t_round);
    }
    return cost;
}

}  // namespace flsim
