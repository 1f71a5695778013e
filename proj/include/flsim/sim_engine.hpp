#pragma once

/// @file sim_engine.hpp
/// @brief FedAvg round pipeline: variance sampling, state encoding, policy
/// plan, timed and energy-accounted local training, straggler exclusion,
/// aggregation, evaluation and the controller's Q-update.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flsim/controller.hpp"
#include "flsim/data.hpp"
#include "flsim/fleet.hpp"
#include "flsim/round_model.hpp"
#include "flsim/training.hpp"
#include "flsim/variance.hpp"

namespace flsim {

enum class PolicyKind { AutoFL, Random, Power, Performance, OParticipant, OFL };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);

struct IdxSource {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    int num_classes = 10;

    bool operator==(const IdxSource&) const = default;
};

struct DatasetSource {
    SyntheticSpec synthetic;
    std::optional<IdxSource> idx;
};

/// Everything one (policy, seed) run needs.
struct RunConfig {
    PolicyKind policy = PolicyKind::Random;
    FleetSpec fleet;
    WorkloadSpec workload = WorkloadSpec::preset("cnn-mnist");
    GlobalParams params;
    DatasetSource dataset;
    DataRegime regime;
    VarianceConfig variance;
    LearnerConfig learner;
    std::uint64_t seed = 1;
    /// Participants slower than this multiple of the round's median latency are dropped.
    double straggler_multiplier = 3.0;
    /// Score every round against the O_FL plan for the same environment.
    bool record_oracle = false;
    /// Keep going after reaching the target: re-initialise the model and
    /// start a new training job, until max_rounds.
    bool restart_on_target = false;
};

struct DeviceRound {
    ExecutionRecord record;
    EnergyBreakdown energy;
    bool selected = false;
    bool excluded = false;
    /// Contributed an update to aggregation.
    bool trained = false;
    std::optional<double> reward;
};

struct RoundOutcome {
    std::size_t round = 0;
    /// Training job index (only advances with restart_on_target).
    std::size_t job = 0;
    RoundPlan plan;
    std::vector<DeviceConditions> conditions;
    std::vector<DeviceRound> devices;
    double deadline = 0.0;
    double t_round = 0.0;
    double accuracy = 0.0;
    double accuracy_prev = 0.0;
    std::vector<DeviceId> excluded;
    /// No update reached the server; the model is unchanged.
    bool no_update = false;
    bool explored = false;
    double energy_total = 0.0;
    std::optional<bool> oracle_match;
    bool reached_target = false;
};

struct JobRecord {
    std::size_t first_round = 0;
    std::size_t last_round = 0;
    double energy = 0.0;
};

struct RunReport {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<RoundOutcome> rounds;
    /// First round (0-based) whose post-aggregation accuracy met the target.
    std::optional<std::size_t> convergence_round;
    double total_energy = 0.0;
    /// Energy through the convergence round (all rounds when not converged).
    double energy_to_convergence = 0.0;
    double energy_normalizer = 0.0;
    std::optional<double> oracle_match_rate;
    /// Completed training jobs (restart_on_target runs).
    std::vector<JobRecord> jobs;

    bool converged() const { return convergence_round.has_value(); }
    /// 1 / energy-to-target; nullopt when the run never converged.
    std::optional<double> ppw() const;
};

/// Seed used for a device's local SGD shuffle in a round.
std::uint64_t training_seed(std::uint64_t run_seed, std::size_t round, DeviceId device);
/// Seed used to initialise the global model of a training job.
std::uint64_t model_seed(std::uint64_t run_seed, std::size_t job);

/// Ground-truth per-device conditions for a round; independent of the policy.
std::vector<DeviceConditions> sample_conditions(const RunConfig& config, const DataPartition& part,
                                                std::size_t num_devices, std::size_t round);

/// Fleet energy of the random baseline's round-0 plan.
double random_round_zero_energy(const RunConfig& config, const Fleet& fleet,
                                const WorkloadSpec& workload, const DataPartition& part);

/// True when both plans have the same tier histogram and the same multiset
/// of (tier, processor) targets.
bool plans_match(const Fleet& fleet, const RoundPlan& a, const RoundPlan& b);

/// Builds the dataset named by the source (synthetic or IDX).
DatasetSplit load_dataset(const DatasetSource& source);

class Simulation {
public:
    explicit Simulation(RunConfig config);
    Simulation(RunConfig config, std::shared_ptr<const DatasetSplit> data);

    bool finished() const;
    RoundOutcome run_round();
    RunReport run();

    /// Replace the policy's plan (test harnesses build hand-made scenarios).
    using PlanOverride = std::function<RoundPlan(const RoundEnvironment&, std::size_t round)>;
    void set_plan_override(PlanOverride fn) { override_ = std::move(fn); }

    void set_tables(QTables tables) { tables_ = std::move(tables); }

    const RunConfig& config() const { return config_; }
    const Fleet& fleet() const { return fleet_; }
    const WorkloadSpec& workload() const { return workload_; }
    const DatasetSplit& data() const { return *data_; }
    const DataPartition& partition() const { return partition_; }
    const ModelState& model() const { return model_; }
    const QTables& tables() const { return tables_; }
    const GlobalState& global_state() const { return global_state_; }
    double energy_normalizer() const { return normalizer_; }
    std::size_t round() const { return round_; }

private:
    std::vector<LocalState> local_states(const std::vector<DeviceConditions>& conditions) const;
    RoundPlan plan_for(const RoundEnvironment& env, const std::vector<LocalState>& locals,
                       bool& explored);
    void learn(RoundOutcome& outcome, const std::vector<LocalState>& locals);
    void restart_job();

    RunConfig config_;
    std::shared_ptr<const DatasetSplit> data_;
    Fleet fleet_;
    WorkloadSpec workload_;
    DataPartition partition_;
    GlobalState global_state_;
    ModelState model_;
    QTables tables_;
    double normalizer_ = 1.0;
    double accuracy_prev_ = 0.0;
    std::size_t round_ = 0;
    std::size_t job_ = 0;
    bool converged_ = false;
    std::optional<std::size_t> first_convergence_;
    std::vector<JobRecord> jobs_;
    std::size_t job_start_ = 0;
    double job_energy_ = 0.0;
    std::optional<RoundPlan> pending_plan_;
    bool pending_explored_ = false;
    PlanOverride override_;
};

RunReport run_experiment(const RunConfig& config);

}  // namespace flsim
