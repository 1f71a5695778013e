#pragma once

/// @file round_model.hpp
/// @brief Ground-truth latency and energy of one aggregation round for a
/// given participant plan. Shared by the simulator and the oracle policies.

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "flsim/energy.hpp"

namespace flsim {

using Action = ExecutionTarget;

/// Participants and their execution targets. Ordered by device id.
struct RoundPlan {
    std::map<DeviceId, Action> actions;

    std::vector<DeviceId> selected() const;
    bool contains(DeviceId id) const { return actions.count(id) != 0; }
    std::size_t size() const { return actions.size(); }
    bool operator==(const RoundPlan&) const = default;
};

/// Every (processor, step) a device can run on: CPU steps, then GPU steps.
std::vector<Action> actions_for(const DeviceProfile& profile);
/// CPU at its top DVFS step.
Action default_action(const DeviceProfile& profile);

struct DeviceConditions {
    InterferenceState interference;
    NetworkCondition network;
    std::size_t samples = 0;
};

class RoundEnvironment {
public:
    RoundEnvironment(const Fleet& fleet, const WorkloadSpec& workload, const GlobalParams& params,
                     std::vector<DeviceConditions> conditions);

    const Fleet& fleet() const { return *fleet_; }
    const WorkloadSpec& workload() const { return *workload_; }
    const GlobalParams& params() const { return *params_; }
    const DeviceConditions& conditions(DeviceId id) const;
    const std::vector<DeviceConditions>& all_conditions() const { return conditions_; }

    /// Local training time. Devices without data do no work.
    double compute_seconds(DeviceId id, Action action) const;
    /// One-way model transfer time (download and upload are equal).
    double transfer_seconds(DeviceId id) const;
    /// download + compute + upload.
    double latency(DeviceId id, Action action) const;

    /// Record for a participant that finished and waits idle until t_round.
    ExecutionRecord participant_record(DeviceId id, Action action, double t_round) const;
    /// Record for a participant cut off at t_round before uploading.
    ExecutionRecord straggler_record(DeviceId id, Action action, double t_round) const;
    /// Record for a device that was not selected.
    ExecutionRecord idle_record(DeviceId id, double t_round) const;

    /// Energy of a participant that finished in time, including waiting.
    double participant_energy(DeviceId id, Action action, double t_round) const;
    double idle_energy(DeviceId id, double t_round) const;

private:
    const Fleet* fleet_;
    const WorkloadSpec* workload_;
    const GlobalParams* params_;
    std::vector<DeviceConditions> conditions_;
};

/// Breakdown of a record: participants split compute/comm, idle devices idle.
EnergyBreakdown breakdown(const DeviceProfile& profile, const ExecutionRecord& record,
                          bool participant);

struct PlanCost {
    double t_round = 0.0;
    double energy = 0.0;
};

/// Round time and fleet-wide energy of a plan with every participant
/// included. The objective the oracle policies minimise.
PlanCost evaluate_plan(const RoundEnvironment& env, const RoundPlan& plan);

}  // namespace flsim
